"""Fuzzing campaigns: paired mutation/seed swarms driving the toy DUT.

Each of the ``n_particles`` threads owns one mutation particle (operator
weights) and one seed particle (per-slot instruction-type weights) and
produces exactly one test per iteration: a fresh seed if its mutation
particle was reset this iteration, otherwise a mutant of its latest
interesting test.
"""
from __future__ import annotations

import csv
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .arch import CoverageMap
from .detector import BUG_IDS, compare_traces, detected_bugs
from .toy_dut import NUM_POINTS, simulate
from .golden import golden_execute
from .isa import NUM_TYPES, TestProgram
from .mutation_engine import OPERATORS, mutate
from .pso_core import PsoConfig, init_swarm, rst_mon, update_pv
from .seed_generator import LifeRecord, gen_seed, seed_fitness, uniform_rows, update_seed_swarm

log = logging.getLogger(__name__)

VARIANTS = ("baseline", "pso", "pso-reset", "psofuzz")
CSV_COLUMNS = ("iter", "tests_total", "coverage", "new_points", "resets_m", "resets_t", "gbest_fitness")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SchedulingPolicy:
    use_pso: bool
    use_reset: bool
    use_seed_pso: bool


_POLICIES = {
    "baseline": SchedulingPolicy(False, False, False),
    "pso": SchedulingPolicy(True, False, False),
    "pso-reset": SchedulingPolicy(True, True, False),
    "psofuzz": SchedulingPolicy(True, True, True),
}


@dataclass
class CampaignConfig:
    variant: str = "psofuzz"
    n_particles: int = 10
    program_len: int = 20
    k: float = 0.5
    beta_m: int = 3
    beta_t: int = 3
    target_coverage: Union[int, float, None] = None
    max_tests: Optional[int] = 5000
    time_limit_secs: Optional[float] = None
    rng_seed: int = 0
    out_dir: Optional[str] = None
    checkpoint_every: int = 0

    def __post_init__(self):
        if self.variant not in _POLICIES:
            raise ConfigError(f"unknown variant {self.variant!r}; choose from {', '.join(VARIANTS)}")
        if self.n_particles < 1 or self.program_len < 1:
            raise ConfigError("n_particles and program_len must be positive")
        if not 0.0 <= self.k <= 1.0:
            raise ConfigError(f"k must lie in [0, 1], got {self.k}")
        if self.beta_m < 1 or self.beta_t < 1:
            raise ConfigError("beta_m and beta_t must be >= 1")
        if self.max_tests is not None and self.max_tests < 0:
            raise ConfigError("max_tests must be nonnegative")
        tc = self.target_coverage
        if tc is not None and (tc < 0 or (isinstance(tc, float) and tc > 1.0)):
            raise ConfigError("target_coverage is a nonnegative count or a fraction in [0, 1]")

    def target_points(self) -> int:
        tc = self.target_coverage
        if tc is None:
            return NUM_POINTS
        if isinstance(tc, float):
            return math.ceil(tc * NUM_POINTS)
        return int(tc)


def variant_behavior(cfg: Union[CampaignConfig, str]) -> SchedulingPolicy:
    variant = cfg.variant if isinstance(cfg, CampaignConfig) else cfg
    try:
        return _POLICIES[variant]
    except KeyError:
        raise ConfigError(f"unknown variant {variant!r}") from None


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    tests_total: int
    coverage: int
    new_points: int
    resets_m: int
    resets_t: int
    gbest_fitness: float

    def row(self) -> list:
        g = self.gbest_fitness
        g = "" if not math.isfinite(g) else (int(g) if float(g).is_integer() else repr(g))
        return [self.iter, self.tests_total, self.coverage, self.new_points,
                self.resets_m, self.resets_t, g]


@dataclass
class BugDetection:
    tests: int
    iteration: int
    test_id: str


@dataclass
class CampaignResult:
    config: CampaignConfig
    coverage: CoverageMap
    records: list
    mismatches: list
    bug_detection: dict
    velocity_norms: np.ndarray
    survivals: list = field(default_factory=list)
    censored_survivals: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def tests_total(self) -> int:
        return self.records[-1].tests_total if self.records else 0

    def tests_to_detection(self, bug: str) -> Optional[int]:
        d = self.bug_detection.get(bug)
        return d.tests if d else None

    def curve(self) -> list:
        return [(r.tests_total, r.coverage) for r in self.records]


def _rng(seq: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seq))


class Campaign:
    """Mutable campaign state; ``step`` runs one iteration of the main loop."""

    def __init__(self, cfg: CampaignConfig, policy: Optional[SchedulingPolicy] = None):
        self.cfg = cfg
        self.policy = policy or variant_behavior(cfg)
        n = cfg.n_particles
        root = np.random.SeedSequence(cfg.rng_seed)
        ss_m, ss_t, ss_seed, ss_mut = root.spawn(4)
        self.rng_m = _rng(ss_m)
        self.rng_t = _rng(ss_t)
        self.seed_rngs = [_rng(s) for s in ss_seed.spawn(n)]
        self.mut_rngs = [_rng(s) for s in ss_mut.spawn(n)]

        self.iteration = 0
        self.tests_total = 0
        self.serial = 0
        self.coverage = CoverageMap(NUM_POINTS)
        self.thread_cov = [0] * n
        self.lives = [LifeRecord(0) for _ in range(n)]
        self.records = []
        self.mismatches = []
        self.bug_detection = {}
        self.velocity_norms = []
        self.survivals = []
        self.elapsed = 0.0

        self.uniform_m = np.full(len(OPERATORS), 1.0 / len(OPERATORS))
        self.uniform_t = uniform_rows(cfg.program_len)
        self.swarm_m = init_swarm(n, (len(OPERATORS),), self.rng_m) if self.policy.use_pso else None
        self.swarm_t = (init_swarm(n, (cfg.program_len, NUM_TYPES), self.rng_t)
                        if self.policy.use_seed_pso else None)
        self.pending = [self._new_seed(i) for i in range(n)]
        self.bases = list(self.pending)

    # -- helpers -----------------------------------------------------------

    def _next_id(self) -> str:
        self.serial += 1
        return f"t{self.serial:07d}"

    def _new_seed(self, i: int) -> TestProgram:
        rows = self.swarm_t.particles[i].position if self.policy.use_seed_pso else self.uniform_t
        return gen_seed(rows, self.seed_rngs[i], self._next_id())

    def pso_config(self, beta: int) -> PsoConfig:
        return PsoConfig(k=self.cfg.k, beta=beta, rng_seed=self.cfg.rng_seed)

    def done(self) -> bool:
        cfg = self.cfg
        if len(self.coverage) >= cfg.target_points():
            return True
        if cfg.max_tests is not None and self.tests_total >= cfg.max_tests:
            return True
        if cfg.time_limit_secs is not None and self.elapsed >= cfg.time_limit_secs:
            return True
        return False

    # -- main loop ---------------------------------------------------------

    def _evaluate(self, i: int, test: TestProgram) -> int:
        cov, dut_trace = simulate(test)
        found = compare_traces(dut_trace, golden_execute(test))
        self.tests_total += 1
        if found:
            self.mismatches.extend(found)
            for bug in sorted(detected_bugs(found)):
                if bug not in self.bug_detection:
                    self.bug_detection[bug] = BugDetection(self.tests_total, self.iteration, test.id)
                    log.info("%s first detected by %s after %d tests", bug, test.id, self.tests_total)
        new = self.coverage.update(cov)
        if new:
            self.bases[i] = test
        self.thread_cov[i] |= cov.bits
        return new

    def step(self) -> IterationRecord:
        started = time.monotonic()
        self.iteration += 1
        it = self.iteration
        n = self.cfg.n_particles
        new_points = 0
        fitness = {}
        for i, test in enumerate(self.pending):
            new_points += self._evaluate(i, test)
            fitness[i] = self.thread_cov[i].bit_count()

        resets_m, resets_t = [], []
        if self.policy.use_pso:
            monitor = rst_mon(self.swarm_m, self.cfg.beta_m, fitness)
            if self.policy.use_reset:
                resets_m = monitor.reset
            for i in resets_m:
                self.lives[i].reset_at = it
                self.survivals.append(seed_fitness(self.lives[i]))
            if resets_m and self.policy.use_seed_pso:
                f_t = {i: seed_fitness(self.lives[i]) for i in resets_m}
                resets_t = update_seed_swarm(self.swarm_t, f_t, self.cfg.beta_t,
                                             self.pso_config(self.cfg.beta_t), self.rng_t)
            update_pv(self.swarm_m, self.pso_config(self.cfg.beta_m), self.rng_m, reset=resets_m)
            for i in resets_m:
                self.lives[i] = LifeRecord(it)
                self.thread_cov[i] = 0
            self.velocity_norms.append(self.swarm_m.velocity_norms().tolist())
            gbest = self.swarm_m.global_best_fitness
        else:
            gbest = float(max(fitness.values()))

        reset_set = set(resets_m)
        for i in range(n):
            if i in reset_set:
                seed = self._new_seed(i)
                self.bases[i] = seed
                self.pending[i] = seed
            else:
                w = self.swarm_m.particles[i].position if self.policy.use_pso else self.uniform_m
                self.pending[i] = mutate(self.bases[i], w, self.mut_rngs[i], new_id=self._next_id())

        rec = IterationRecord(it, self.tests_total, len(self.coverage), new_points,
                              len(resets_m), len(resets_t), float(gbest))
        self.records.append(rec)
        self.elapsed += time.monotonic() - started
        return rec

    def run(self) -> CampaignResult:
        from .checkpoint import save_checkpoint
        cfg = self.cfg
        if cfg.out_dir:
            Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
        while not self.done():
            self.step()
            if cfg.checkpoint_every and cfg.out_dir and self.iteration % cfg.checkpoint_every == 0:
                save_checkpoint(self, Path(cfg.out_dir) / "checkpoint.bin")
        result = self.result()
        if cfg.out_dir:
            if cfg.checkpoint_every:
                save_checkpoint(self, Path(cfg.out_dir) / "checkpoint.bin")
            write_artifacts(result, cfg.out_dir)
        return result

    def result(self) -> CampaignResult:
        it = self.iteration
        censored = [it - life.born_at for life in self.lives]
        return CampaignResult(
            config=self.cfg,
            coverage=self.coverage.copy(),
            records=list(self.records),
            mismatches=list(self.mismatches),
            bug_detection=dict(self.bug_detection),
            velocity_norms=np.array(self.velocity_norms, dtype=float).reshape(-1, self.cfg.n_particles),
            survivals=list(self.survivals),
            censored_survivals=censored,
        )


def run_campaign(cfg: CampaignConfig, policy: Optional[SchedulingPolicy] = None,
                 resume: Union[str, os.PathLike, None] = None) -> CampaignResult:
    """Run a campaign to its stopping condition, optionally from a checkpoint."""
    if resume is not None:
        from .checkpoint import load_checkpoint
        campaign = load_checkpoint(resume, budget=cfg)
    else:
        campaign = Campaign(cfg, policy)
    return campaign.run()


# -- artifacts ---------------------------------------------------------------

def write_campaign_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow(r.row())


def write_bugs_csv(bug_detection: dict, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("bug", "detected", "tests", "iteration", "test_id"))
        for bug in BUG_IDS:
            d = bug_detection.get(bug)
            if d is None:
                w.writerow((bug, 0, "N.D.", "", ""))
            else:
                w.writerow((bug, 1, d.tests, d.iteration, d.test_id))


def write_mismatches(mismatches, path) -> None:
    with open(path, "w") as fh:
        for m in mismatches:
            fh.write(m.to_json() + "\n")


def write_artifacts(result: CampaignResult, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_campaign_csv(result.records, out / "campaign.csv")
    write_bugs_csv(result.bug_detection, out / "bugs.csv")
    write_mismatches(result.mismatches, out / "mismatches.jsonl")


def read_campaign_csv(path) -> list:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for r in rows:
        g = r["gbest_fitness"]
        out.append(IterationRecord(int(r["iter"]), int(r["tests_total"]), int(r["coverage"]),
                                   int(r["new_points"]), int(r["resets_m"]), int(r["resets_t"]),
                                   float(g) if g else -math.inf))
    return out


def read_bugs_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {r["bug"]: BugDetection(int(r["tests"]), int(r["iteration"]), r["test_id"])
            for r in rows if r["detected"] == "1"}
