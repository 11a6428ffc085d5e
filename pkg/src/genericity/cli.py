"""Command-line driver for the experiment battery."""

from __future__ import annotations

import argparse
import sys

from .density import GenericityError
from .experiments import EXPERIMENTS, ConfigError, load_config, run, validate

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME, EXIT_CHECK = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="genericity", description=__doc__)
    p.add_argument("--config", help="flat YAML/JSON key-value config file")
    p.add_argument("--experiment", choices=sorted(EXPERIMENTS), help="experiment to run")
    p.add_argument("--seed", type=int, help="unsigned 64-bit seed for Monte Carlo runs")
    p.add_argument("--trials", type=int, help="Monte Carlo trials per point")
    p.add_argument("--out", help="write the result JSON here ('-' for stdout)")
    p.add_argument("--csv", help="write plot data CSV here")
    p.add_argument("--quiet", action="store_true", help="suppress the summary table")
    p.add_argument("--check", action="store_true", help="exit with status 3 if any check fails")
    p.add_argument("--list", action="store_true", help="list experiment names and exit")
    return p


def format_table(header: list[str], rows: list[list]) -> str:
    cells = [header] + [[_fmt(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells)


def _fmt(c) -> str:
    return f"{c:.6g}" if isinstance(c, float) else str(c)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.list:
        print("\n".join(sorted(EXPERIMENTS)))
        return EXIT_OK
    overrides = {"experiment": args.experiment, "seed": args.seed, "trials": args.trials,
                 "out": args.out, "csv": args.csv}
    try:
        if args.config:
            cfg = load_config(args.config, **overrides)
        else:
            cfg = validate({k: v for k, v in overrides.items() if v is not None})
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        result = run(cfg)
    except (GenericityError, ValueError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if cfg.out == "-":
        print(result.to_json())
    elif not args.quiet:
        if result.plot is not None:
            print(format_table(*result.plot))
        print(f"experiment {cfg.experiment} ({result.wall_time:.2f}s)")
        for name, ok in result.checks.items():
            print(f"  {'PASS' if ok else 'FAIL'}  {name}")
    if args.check and not result.passed:
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
