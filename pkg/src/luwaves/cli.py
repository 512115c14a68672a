"""Command-line entry point: ``luwaves {run,ensemble,compare,kdv}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import ConfigError, NumericalError
from .runner import run_compare, run_ensemble, run_kdv, run_single

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="luwaves", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file (defaults apply when omitted)")
    common.add_argument("--seed", type=lambda s: int(s, 0), help="base seed (unsigned 64-bit), overrides the config")
    common.add_argument("--out", help="output directory, overrides out_dir")
    common.add_argument("--force", action="store_true", help="replace an existing output directory")
    sub.add_parser("run", parents=[common], help="simulate a single path")
    ens = sub.add_parser("ensemble", parents=[common], help="simulate many paths and write statistics")
    ens.add_argument("--paths", type=int, help="ensemble size, overrides the config")
    ens.add_argument("--workers", type=int, help="worker processes (0 = all cores)")
    cmp_ = sub.add_parser("compare", parents=[common], help="run several model kinds on one configuration")
    cmp_.add_argument("--kinds", default="sv,boussinesq,sgn",
                      help="comma-separated model kinds (default: sv,boussinesq,sgn)")
    sub.add_parser("kdv", parents=[common], help="KdV run (deterministic, transport or dissipative)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["out_dir"] = args.out
        if getattr(args, "paths", None) is not None:
            overrides["paths"] = args.paths
        if getattr(args, "workers", None) is not None:
            overrides["workers"] = args.workers
        if overrides:
            cfg = cfg.with_overrides(**overrides)
        if args.command == "run":
            result = run_single(cfg, args.force)
        elif args.command == "ensemble":
            result = run_ensemble(cfg, args.force)
        elif args.command == "compare":
            result = run_compare(cfg, [k for k in args.kinds.split(",") if k.strip()], args.force)
        else:
            result = run_kdv(cfg, args.force)
    except ConfigError as exc:
        print(f"luwaves: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"luwaves: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if result.status != EXIT_OK:
        print(f"luwaves: numerical failure, partial output in {result.out_dir}:\n{result.message}", file=sys.stderr)
    else:
        print(result.out_dir)
    return result.status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
