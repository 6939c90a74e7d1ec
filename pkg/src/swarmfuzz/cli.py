"""Command-line front end: fuzz, bench, report, show-bugs, verify."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import report
from .campaign import VARIANTS, CampaignConfig, ConfigError, run_campaign
from .checkpoint import CheckpointError
from .detector import BUG_DESCRIPTIONS, BUG_IDS
from .isa import program_from_text, program_to_text
from .witnesses import WITNESS_SOURCE, verify

EXIT_CONFIG = 2


def _target(text: str):
    try:
        return float(text) if "." in text else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a count or fraction: {text!r}") from None


def _campaign_flags(p: argparse.ArgumentParser, out_default: str) -> None:
    d = CampaignConfig()
    p.add_argument("--variant", default=d.variant, help=f"one of {', '.join(VARIANTS)}")
    p.add_argument("--particles", type=int, default=d.n_particles, help="swarm size (fuzzer threads)")
    p.add_argument("--seed-len", type=int, default=d.program_len, help="instructions per test program")
    p.add_argument("--k", type=float, default=d.k, help="velocity inertia")
    p.add_argument("--beta-m", type=int, default=d.beta_m, help="stagnation limit, mutation swarm")
    p.add_argument("--beta-t", type=int, default=d.beta_t, help="stagnation limit, seed swarm")
    p.add_argument("--target-coverage", type=_target, default=None,
                   help="stop at this many points (int) or this fraction (float); default all points")
    p.add_argument("--max-tests", type=int, default=d.max_tests, help="test budget")
    p.add_argument("--time-limit-secs", type=float, default=None, help="wall-clock budget")
    p.add_argument("--rng-seed", type=int, default=d.rng_seed, help="master random seed")
    p.add_argument("--checkpoint-every", type=int, default=d.checkpoint_every,
                   help="write out/checkpoint.bin every N iterations (0: off)")
    p.add_argument("--out", default=out_default, help="output directory (default from $SWARMFUZZ_OUT when set)")


def config_from_args(args, **overrides) -> CampaignConfig:
    fields = dict(variant=args.variant, n_particles=args.particles, program_len=args.seed_len,
                  k=args.k, beta_m=args.beta_m, beta_t=args.beta_t,
                  target_coverage=args.target_coverage, max_tests=args.max_tests,
                  time_limit_secs=args.time_limit_secs, rng_seed=args.rng_seed,
                  out_dir=args.out, checkpoint_every=args.checkpoint_every)
    fields.update(overrides)
    return CampaignConfig(**fields)


def build_parser() -> argparse.ArgumentParser:
    out_env = os.environ.get("SWARMFUZZ_OUT")
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="swarmfuzz", description=__doc__, formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    fuzz = sub.add_parser("fuzz", help="run one campaign", formatter_class=fmt)
    _campaign_flags(fuzz, out_env or "runs/fuzz")
    fuzz.add_argument("--resume", metavar="CHECKPOINT", default=None,
                      help="continue the campaign saved in this checkpoint")

    bench = sub.add_parser("bench", help="all variants x trials, then comparison tables",
                           formatter_class=fmt)
    _campaign_flags(bench, out_env or "runs/bench")
    bench.add_argument("--trials", type=int, default=10, help="trials per variant (seeds rng-seed+t)")
    bench.add_argument("--jobs", type=int, default=1, help="worker processes")

    rep = sub.add_parser("report", help="rebuild tables from a bench directory", formatter_class=fmt)
    rep.add_argument("bench_dir", nargs="?", default=out_env or "runs/bench")

    sub.add_parser("show-bugs", help="describe the injected bugs and their witnesses")
    sub.add_parser("verify", help="check every bug witness is detected and classified")
    return parser


def cmd_fuzz(args) -> int:
    cfg = config_from_args(args)
    result = run_campaign(cfg, resume=args.resume)
    print(f"{cfg.variant}: {result.tests_total} tests, {len(result.coverage)}/"
          f"{result.coverage.total_points} points, {result.iterations} iterations")
    for bug in BUG_IDS:
        t = result.tests_to_detection(bug)
        print(f"  {bug}: {'N.D.' if t is None else f'{t} tests'}")
    return 0


def _bench_one(cfg: CampaignConfig) -> report.TrialSummary:
    return report.TrialSummary.from_result(run_campaign(cfg))


def cmd_bench(args) -> int:
    if args.trials < 1 or args.jobs < 1:
        raise ConfigError("--trials and --jobs must be positive")
    root = Path(args.out)
    base = config_from_args(args, checkpoint_every=0)
    cfgs = [replace(base, variant=v, rng_seed=args.rng_seed + t, out_dir=str(root / v / f"trial_{t:02d}"))
            for v in VARIANTS for t in range(args.trials)]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            summaries = list(pool.map(_bench_one, cfgs))
    else:
        summaries = [_bench_one(c) for c in cfgs]
    results = {}
    for s in summaries:
        results.setdefault(s.variant, []).append(s)
    _print_tables(report.write_report(results, root))
    return 0


def _print_tables(tables: dict) -> None:
    for name in ("bugs_table.csv", "coverage_table.csv"):
        print(f"# {name}")
        print(report.render(tables[name]))
        print()


def cmd_report(args) -> int:
    results = report.load_bench_dir(args.bench_dir)
    if not results:
        print(f"no campaign results under {args.bench_dir}", file=sys.stderr)
        return 1
    _print_tables(report.write_report(results, args.bench_dir))
    return 0


def cmd_show_bugs(args) -> int:
    for bug in BUG_IDS:
        print(f"{bug}  {BUG_DESCRIPTIONS[bug]}")
        src = program_to_text(program_from_text(WITNESS_SOURCE[bug]))
        for line in src.splitlines():
            print(f"      {line}")
    return 0


def cmd_verify(args) -> int:
    statuses = verify()
    for s in statuses:
        print(s.line())
    return 0 if all(s.ok for s in statuses) else 1


COMMANDS = {"fuzz": cmd_fuzz, "bench": cmd_bench, "report": cmd_report,
            "show-bugs": cmd_show_bugs, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"swarmfuzz: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckpointError as exc:
        print(f"swarmfuzz: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"swarmfuzz: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
