"""
Command-line interface: ``discounted-oco {run,verify,replay,bench}``.

Exit status is 0 only when every bound verdict passes (run, verify) or every
ledger replays exactly (replay).
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from ..exceptions import DiscountedOCOError
from ..metrics import runtime_summary
from .config import apply_overrides, load_config
from .replay import replay_ledger
from .reports import REFERENCE_LEARNER, load_ledgers, write_verdicts
from .runner import run_experiment
from .verification import verify_bounds

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_ERROR = 2


def _add_common(parser: argparse.ArgumentParser, config_required: bool):
    parser.add_argument("--config", type=Path, required=config_required, help="Experiment config (TOML)")
    parser.add_argument("--out", type=Path, help="Output directory")
    parser.add_argument("--seed", type=int, help="Override the base seed")
    parser.add_argument("--trials", type=int, help="Override the number of trials")
    parser.add_argument("--quiet", action="store_true", help="Only log warnings and errors")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="discounted-oco",
        description="Discounted online convex optimization and online conformal prediction benchmarks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("run", help="Execute a config and write reports"), True)
    _add_common(sub.add_parser("verify", help="Re-check bounds on stored ledgers"), False)
    _add_common(sub.add_parser("replay", help="Re-derive predictions from stored ledgers"), False)
    _add_common(sub.add_parser("bench", help="Per-step timing of each learner"), True)
    return parser


def _load(args, from_out: bool = False):
    path = args.config
    if path is None:
        if args.out is None:
            raise DiscountedOCOError("Pass --config or an --out directory holding config.json")
        path = args.out / "config.json"
    config = load_config(path)
    out = None if from_out else (str(args.out) if args.out else None)
    return apply_overrides(config, seed=args.seed, trials=args.trials, out=out)


def _out_dir(args, config) -> Path:
    return args.out if args.out is not None else Path(config.outputs.directory)


def cmd_run(args) -> int:
    config = _load(args)
    out = _out_dir(args, config)
    result = run_experiment(config, out_dir=str(out))
    failed = [v for v in result.verdicts if not v.passed]
    print(f"{len(result.ledgers)} ledgers, {len(result.verdicts)} bound checks, {len(failed)} failed -> {out}")
    for v in failed:
        print(f"FAIL {v.learner_id} trial {v.trial} {v.check} u=[{v.u}] tau={v.tau}: {v.measured} > {v.bound}")
    return EXIT_OK if not failed else EXIT_FAILED


def cmd_verify(args) -> int:
    config = _load(args, from_out=True)
    out = _out_dir(args, config)
    schedule = config.schedule.to_schedule()
    ledgers = load_ledgers(out, config.learner_ids(), config.trials)
    specs = {s.id: s for s in config.learners}
    verdicts = []
    for (learner_id, _), ledger in ledgers.items():
        verdicts.extend(
            verify_bounds(ledger, specs[learner_id], config.comparator_grid, taus=config.taus, schedule=schedule)
        )
    write_verdicts(verdicts, out / "verdicts.csv")
    failed = [v for v in verdicts if not v.passed]
    print(f"{len(verdicts)} bound checks, {len(failed)} failed")
    return EXIT_OK if not failed else EXIT_FAILED


def cmd_replay(args) -> int:
    config = _load(args, from_out=True)
    out = _out_dir(args, config)
    schedule = config.schedule.to_schedule()
    specs = {s.id: s for s in config.learners}
    mismatches = 0
    for (learner_id, trial), ledger in load_ledgers(out, config.learner_ids(), config.trials).items():
        res = replay_ledger(ledger, specs[learner_id], schedule)
        if not res.matches:
            mismatches += 1
            print(f"MISMATCH {learner_id} trial {trial} at round {res.first_mismatch}")
    print(f"replay: {mismatches} mismatching ledgers")
    return EXIT_OK if mismatches == 0 else EXIT_FAILED


def cmd_bench(args) -> int:
    config = _load(args)
    result = run_experiment(config, verify=False, out_dir=str(args.out) if args.out else None)
    reference = next((s.id for s in config.learners if s.kind == REFERENCE_LEARNER), None)
    timing = runtime_summary(result.step_times, reference=reference)
    print(f"{'learner':<24}{'mean_us':>12}{'std_us':>12}{'normalized':>12}")
    for learner_id, t in timing.items():
        print(f"{learner_id:<24}{t['mean'] * 1e6:>12.2f}{t['std'] * 1e6:>12.2f}{t['normalized']:>12.3f}")
    return EXIT_OK


_COMMANDS = {"run": cmd_run, "verify": cmd_verify, "replay": cmd_replay, "bench": cmd_bench}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except DiscountedOCOError as e:
        logger.error("%s", e)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
