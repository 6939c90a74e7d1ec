"""Cross-variant comparison tables and coverage curves."""
from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .campaign import VARIANTS, CampaignResult, read_bugs_csv, read_campaign_csv
from .detector import BUG_IDS
from .toy_dut import NUM_POINTS

ND = "N.D."


@dataclass
class TrialSummary:
    """What the tables need from one campaign; loadable back from its CSVs."""

    variant: str
    bug_tests: dict
    curve: list
    total_points: int = NUM_POINTS
    seed: Optional[int] = None

    @property
    def final_coverage(self) -> int:
        return self.curve[-1][1] if self.curve else 0

    @classmethod
    def from_result(cls, r: CampaignResult) -> "TrialSummary":
        return cls(r.config.variant, {b: d.tests for b, d in r.bug_detection.items()},
                   r.curve(), r.coverage.total_points, r.config.rng_seed)

    @classmethod
    def from_dir(cls, variant: str, path) -> "TrialSummary":
        path = Path(path)
        recs = read_campaign_csv(path / "campaign.csv")
        bugs = read_bugs_csv(path / "bugs.csv")
        return cls(variant, {b: d.tests for b, d in bugs.items()},
                   [(r.tests_total, r.coverage) for r in recs])


def _fmt(x: float, digits: int = 2) -> str:
    if math.isinf(x):
        return ND
    return f"{x:.{digits}f}" if not float(x).is_integer() else str(int(x))


def median_tests(trials: Sequence[TrialSummary], bug: str) -> float:
    """Median tests-to-detection; undetected trials count as +inf."""
    return statistics.median(t.bug_tests.get(bug, math.inf) for t in trials)


def speedup(base: float, other: float) -> float:
    if math.isinf(other):
        return math.nan
    if math.isinf(base):
        return math.inf
    return base / other


def _speedup_cell(s: float) -> str:
    if math.isnan(s):
        return ND
    if math.isinf(s):
        return "inf"
    return f"{s:.2f}"


def _ordered(results: Mapping[str, Sequence]) -> list:
    known = [v for v in VARIANTS if v in results]
    return known + sorted(v for v in results if v not in VARIANTS)


def bug_table(results: Mapping[str, Sequence[TrialSummary]], baseline: str = "baseline") -> list:
    """Rows of ``bug, <variant>_tests, <variant>_speedup, <variant>_detected`` per variant."""
    variants = _ordered(results)
    header = ["bug"]
    for v in variants:
        header += [f"{v}_tests", f"{v}_speedup", f"{v}_detected"]
    rows = [header]
    for bug in BUG_IDS:
        base = median_tests(results[baseline], bug) if baseline in results else math.nan
        row = [bug]
        for v in variants:
            m = median_tests(results[v], bug)
            hits = sum(bug in t.bug_tests for t in results[v])
            ratio = "1.00" if v == baseline else _speedup_cell(speedup(base, m))
            row += [_fmt(m, 1), ratio, f"{hits}/{len(results[v])}"]
        rows.append(row)
    return rows


def mean_curve(trials: Sequence[TrialSummary]):
    """Mean and std coverage on the union grid of tests executed.

    A trial that stopped early (target reached) holds its last value.
    """
    grid = sorted({t for tr in trials for t, _ in tr.curve})
    if not grid:
        return np.array([], dtype=int), np.array([]), np.array([])
    mat = np.empty((len(trials), len(grid)))
    for i, tr in enumerate(trials):
        xs = np.array([t for t, _ in tr.curve] or [0])
        ys = np.array([c for _, c in tr.curve] or [0])
        idx = np.searchsorted(xs, grid, side="right") - 1
        mat[i] = np.where(idx >= 0, ys[np.clip(idx, 0, None)], 0)
    return np.array(grid), mat.mean(axis=0), mat.std(axis=0, ddof=1) if len(trials) > 1 else np.zeros(len(grid))


def tests_to_reach(grid, cov, level: float) -> float:
    hit = np.flatnonzero(cov >= level)
    return float(grid[hit[0]]) if hit.size else math.inf


def coverage_table(results: Mapping[str, Sequence[TrialSummary]], baseline: str = "baseline") -> list:
    """Final coverage, increment over baseline, and tests-to-baseline-coverage speedup."""
    variants = _ordered(results)
    trials_max = max(len(results[v]) for v in variants)
    header = ["variant", "total_mean"] + (["total_std"] if trials_max > 1 else []) + \
        ["total_pct", "increment_pct", "speedup"]
    rows = [header]
    base_final = statistics.mean(t.final_coverage for t in results[baseline]) if baseline in results else math.nan
    if baseline in results:
        bgrid, bcov, _ = mean_curve(results[baseline])
        base_tests = tests_to_reach(bgrid, bcov, base_final)
    for v in variants:
        finals = [t.final_coverage for t in results[v]]
        mean = statistics.mean(finals)
        total = results[v][0].total_points
        row = [v, f"{mean:.1f}"]
        if trials_max > 1:
            row.append(f"{statistics.stdev(finals):.2f}" if len(finals) > 1 else "0.00")
        row.append(f"{100.0 * mean / total:.2f}")
        if baseline in results:
            grid, cov, _ = mean_curve(results[v])
            row.append(f"{100.0 * (mean - base_final) / base_final:+.2f}")
            ratio = speedup(base_tests, tests_to_reach(grid, cov, base_final))
            row.append("1.00" if v == baseline else _speedup_cell(ratio))
        else:
            row += ["", ""]
        rows.append(row)
    return rows


def curve_table(results: Mapping[str, Sequence[TrialSummary]]) -> list:
    variants = _ordered(results)
    with_std = max(len(results[v]) for v in variants) > 1
    rows = [["variant", "tests", "coverage_mean"] + (["coverage_std"] if with_std else [])]
    for v in variants:
        grid, mean, std = mean_curve(results[v])
        for i, t in enumerate(grid):
            row = [v, int(t), f"{mean[i]:.3f}"]
            if with_std:
                row.append(f"{std[i]:.3f}")
            rows.append(row)
    return rows


def write_table(rows: list, path) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerows(rows)


def render(rows: list) -> str:
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(str(c).rjust(w) for c, w in zip(r, widths)) for r in rows)


def write_report(results: Mapping[str, Sequence[TrialSummary]], out_dir) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables = {"bugs_table.csv": bug_table(results), "coverage_table.csv": coverage_table(results),
              "coverage_curves.csv": curve_table(results)}
    for name, rows in tables.items():
        write_table(rows, out / name)
    return tables


def load_bench_dir(root) -> dict:
    """Collect ``<root>/<variant>/trial_*/`` campaign outputs."""
    root = Path(root)
    results = {}
    for vdir in sorted(p for p in root.iterdir() if p.is_dir()):
        trials = [TrialSummary.from_dir(vdir.name, t) for t in sorted(vdir.glob("trial_*"))
                  if (t / "campaign.csv").exists()]
        if trials:
            results[vdir.name] = trials
    return results


@dataclass
class DirectionalSummary:
    bugs_lower: dict = field(default_factory=dict)
    coverage_ok: bool = False
    medians: dict = field(default_factory=dict)
    coverage: dict = field(default_factory=dict)


def directional_summary(results: Mapping[str, Sequence[TrialSummary]],
                        variants=("psofuzz", "pso-reset"), baseline: str = "baseline") -> DirectionalSummary:
    """Per-variant list of bugs whose median tests-to-detection beat baseline.

    Undetected counts as +inf, so a bug no variant finds is never "lower".
    """
    s = DirectionalSummary()
    for v in (baseline,) + tuple(variants):
        s.medians[v] = {b: median_tests(results[v], b) for b in BUG_IDS}
        s.coverage[v] = statistics.mean(t.final_coverage for t in results[v])
    for v in variants:
        s.bugs_lower[v] = [b for b in BUG_IDS if s.medians[v][b] < s.medians[baseline][b]]
    s.coverage_ok = s.coverage["psofuzz"] >= s.coverage[baseline] if "psofuzz" in variants else True
    return s
