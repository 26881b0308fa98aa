"""Command-line entry points.

Three verbs for three tasks:
    ehrlab run <config> [--out DIR] [--dump-every N] [--resume SNAPSHOT]
    ehrlab check <config>             fast invariant suite, no full run
    ehrlab sweep <config> [--out DIR] convergence study (sweep key required)
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, parse_config
from .matter.state import InstabilityError, MatterError
from .runner import RunAborted, check_scenario, run_scenario, sweep_scenario


def _load(path: str):
    text = Path(path).read_text()
    return parse_config(text)


def _cmd_run(args) -> int:
    config = _load(args.config)
    result = run_scenario(
        config, outdir=args.out, resume=args.resume, dump_every=args.dump_every,
    )
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"wrote {result.paths['trajectory']}")
    print(f"wrote {result.paths['residuals']}")
    print(f"wrote {result.paths['report']}")
    print("report: " + ("PASS" if result.report.all_passed else "FAIL"))
    return 0 if result.report.all_passed else 1


def _cmd_check(args) -> int:
    config = _load(args.config)
    rows = check_scenario(config)
    worst = True
    for name, passed, detail in rows:
        verdict = "PASS" if passed else "FAIL"
        print(f"{verdict}  {name}" + (f"  ({detail})" if detail else ""))
        worst = worst and passed
    return 0 if worst else 1


def _cmd_sweep(args) -> int:
    config = _load(args.config)
    result = sweep_scenario(config, outdir=args.out)
    print(f"wrote {result.paths['report']}")
    for row in result.convergence:
        print("  " + "  ".join(f"{k}={v:.6g}" for k, v in row.items()))
    print("report: " + ("PASS" if result.report.all_passed else "FAIL"))
    return 0 if result.report.all_passed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ehrlab",
        description="Relativistic wave-packet laboratory: spectral evolution "
                    "in prescribed electromagnetic fields with force/power "
                    "balance verification.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write its outputs")
    p_run.add_argument("config", help="scenario config file")
    p_run.add_argument("--out", default=None, help="output directory override")
    p_run.add_argument("--dump-every", type=int, default=None,
                       help="sampling stride override")
    p_run.add_argument("--resume", default=None, help="resume from a snapshot file")
    p_run.set_defaults(func=_cmd_run)

    p_check = sub.add_parser("check", help="run the invariant checks only")
    p_check.add_argument("config", help="scenario config file")
    p_check.set_defaults(func=_cmd_check)

    p_sweep = sub.add_parser("sweep", help="run the configured convergence sweep")
    p_sweep.add_argument("config", help="scenario config file")
    p_sweep.add_argument("--out", default=None, help="output directory override")
    p_sweep.set_defaults(func=_cmd_sweep)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, MatterError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RunAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.snapshot_path is not None:
            print(f"last good snapshot: {exc.snapshot_path}", file=sys.stderr)
        return 3
    except InstabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
