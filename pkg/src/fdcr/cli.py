"""Command-line entry point: ``fdcr {eval,design,sweep,validate}``.

Exit codes: 0 success, 1 config/validation error, 2 numeric error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .errors import DomainError, NumericError
from .sweep import (
    ConfigError,
    OutputError,
    SweepResult,
    emit_csv,
    parse_config,
    run_sweep,
    with_overrides,
)
from .validation import run_all

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

EVAL_TASKS = ("su_closed", "pu_proper", "pu_upper", "pu_exact")
DESIGN_TASKS = ("design_proper", "design_improper")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario/sweep config file")
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--seed", type=int, help="Monte-Carlo seed, overrides the config")
    common.add_argument("--samples", type=int, help="Monte-Carlo sample count, overrides the config")
    common.add_argument("--quadrature-order", type=int, help="Gauss-Laguerre order per axis")
    common.add_argument("--workers", type=int, default=1, help="sweep points evaluated concurrently")

    p = argparse.ArgumentParser(prog="fdcr", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("eval", parents=[common], help="all outage metrics at one scenario point")
    sub.add_parser("design", parents=[common], help="proper and improper SU designs at one point")
    sub.add_parser("sweep", parents=[common], help="run a sweep config and emit CSV")
    sub.add_parser("validate", parents=[common], help="run the oracle-agreement checks")
    return p


def _load_spec(args, default_tasks=None, single_point=False):
    if not args.config:
        raise ConfigError("--config is required")
    try:
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise OutputError(f"cannot read config {args.config}: {exc}") from exc
    spec = parse_config(text, default_tasks=default_tasks)
    if single_point:
        if spec.axes:
            raise ConfigError(f"'{args.command}' takes a single point; remove the sweep.* keys")
        if default_tasks is not None:
            tasks = tuple(default_tasks)
            if spec.mc is not None and args.command == "eval":
                tasks += ("pu_mc", "su_mc")
            spec = replace(spec, tasks=tasks)
    try:
        return with_overrides(spec, args.seed, args.samples, args.quadrature_order)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def _write(result: SweepResult, out_path):
    if out_path is None:
        emit_csv(result, sys.stdout)
        return
    try:
        fh = open(out_path, "wb")
    except OSError as exc:
        raise OutputError(f"cannot open {out_path}: {exc}") from exc
    with fh:
        emit_csv(result, fh)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "validate":
            checks = run_all()
            for c in checks:
                print(c.line())
            return EXIT_OK if all(c.passed for c in checks) else EXIT_NUMERIC
        if args.command == "eval":
            spec = _load_spec(args, EVAL_TASKS, single_point=True)
        elif args.command == "design":
            spec = _load_spec(args, DESIGN_TASKS, single_point=True)
        else:
            spec = _load_spec(args)
        _write(run_sweep(spec, workers=args.workers), args.out)
    except ConfigError as exc:
        print(f"fdcr: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, DomainError) as exc:
        print(f"fdcr: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"fdcr: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
