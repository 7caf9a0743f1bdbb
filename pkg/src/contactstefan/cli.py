"""Command-line entry point.

    contactstefan check  --config demo.cfg
    contactstefan solve  --config demo.cfg --out results/
    contactstefan oracle --config demo.cfg --grid 65
    contactstefan sweep  --config demo.cfg --param P --range 60 80 --count 5

Exit status: 0 on success, 1 when a model check or the solver fails, 2 when
the configuration cannot be read.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import load_config
from .errors import ConfigError
from .pipeline import (format_sweep, run_check, run_oracle, run_solve, run_sweep, write_report)

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG = 0, 1, 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog="contactstefan",
        description="Similarity solutions of the two-phase spherical contact melting problem.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="run configuration file")
        p.add_argument("--out", help="output directory (overrides [output] dir)")
        p.add_argument("--tol", type=float, help="Picard sup-norm tolerance")
        p.add_argument("--grid", type=int, help="nodes per phase grid")
        p.add_argument("--snapshot-time", type=float, help="time t1 for the theta column")
        p.add_argument("--force", action="store_true",
                       help="solve even when hypotheses or window conditions fail")

    common(sub.add_parser("check", help="verify hypotheses and contraction windows"))
    common(sub.add_parser("solve", help="solve for the melt front and write profiles"))
    common(sub.add_parser("oracle", help="compare the Picard solution with a shooting solve"))
    sweep = sub.add_parser("sweep", help="repeat the solve over a parameter range")
    common(sweep)
    sweep.add_argument("--param", required=True, help="physical parameter to vary, e.g. P or k")
    sweep.add_argument("--range", nargs=2, type=float, required=True, metavar=("LO", "HI"))
    sweep.add_argument("--count", type=int, default=5)
    sweep.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    return parser


def _load(args):
    config = load_config(args.config)
    try:
        if args.tol is not None or args.grid is not None:
            config = config.with_solver(tol=args.tol, grid_size=args.grid)
        if args.snapshot_time is not None:
            config = replace(config, snapshot_time=args.snapshot_time)
        if args.out is not None:
            config = replace(config, out_dir=args.out)
    except ValueError as exc:
        raise ConfigError(str(exc), "command line") from None
    return config


def _emit(report, config):
    text = report.text()
    sys.stdout.write(text)
    if config.out_dir:
        write_report(Path(config.out_dir) / "report.txt", report)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = _load(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "check":
        report = run_check(config)
        _emit(report, config)
        return EXIT_OK if report.ok else EXIT_FAILURE
    if args.command == "solve":
        report, _ = run_solve(config, force=args.force)
        _emit(report, config)
        if report.error:
            print(f"solver failure in stage '{report.error_stage}': {report.error}", file=sys.stderr)
        return EXIT_OK if report.ok or (args.force and report.solved_ok()) else EXIT_FAILURE
    if args.command == "oracle":
        report = run_oracle(config)
        _emit(report, config)
        if report.error_stage == "oracle":
            print(f"oracle failure: {report.error}", file=sys.stderr)
        elif report.error:
            print(f"solver failure in stage '{report.error_stage}': {report.error}", file=sys.stderr)
        # residual checks count too: a coarse grid can match the oracle yet miss the ODE
        return EXIT_OK if report.solved_ok() else EXIT_FAILURE
    try:
        rows = run_sweep(config, args.param, *args.range, args.count, args.jobs)
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    text = format_sweep(rows, args.param)
    sys.stdout.write(text)
    if config.out_dir:
        path = Path(config.out_dir) / f"sweep_{args.param}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    return EXIT_OK if all(r["status"] == "ok" for r in rows) else EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
