"""Command line entry point.

Example:

    diffbounds run --experiment fig1a --seed 7 --out results/

writes results/fig1a.csv, results/fig1a_audit.json, and results/fig1a.png.
Exit status: 0 on success, 2 for configuration errors, 3 for numerical
aborts (divergent chains, failed reference runs).
"""

from __future__ import annotations

import argparse
import sys

from . import harness


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diffbounds",
        description="Run distance-bound experiments and write result tables.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment")
    run.add_argument("--experiment", choices=harness.EXPERIMENTS,
                     help="experiment to run (or set it in the config file)")
    run.add_argument("--config", metavar="PATH",
                     help="INI config file with a [run] section")
    run.add_argument("--seed", type=int, help="master seed (default 0)")
    run.add_argument("--out", metavar="DIR",
                     help="output directory for CSV, audit JSON, and figure")
    run.add_argument("--reps", type=int, help="override the repeat count")
    run.add_argument("--samples", type=int,
                     help="override the per-cell sample count")
    run.add_argument("--set", dest="overrides", action="append", default=[],
                     metavar="KEY=VALUE",
                     help="override any experiment parameter (repeatable)")
    return parser


def cli_main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = harness.build_config(
            experiment=args.experiment, config_path=args.config,
            seed=args.seed, out=args.out, reps=args.reps,
            samples=args.samples, overrides=args.overrides)
        rows = harness.run_experiment(config)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except RuntimeError as e:
        print(f"aborted: {e}", file=sys.stderr)
        return 3
    where = config.out if config.out is not None else "(no output dir)"
    print(f"{config.experiment}: {len(rows)} rows, seed {config.seed}, "
          f"outputs in {where}")
    return 0


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
