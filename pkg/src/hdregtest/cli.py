"""Command-line interface: ``hdregtest test | simulate | power``.

Exit codes: 0 success, 2 invalid input, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import load_grid, load_power_cases
from .model import NotApplicableError, ValidationError, load_sample
from .procedures import DEFAULT_EB_SEED, TestConfig, run_test
from .report import (
    failed_report_row,
    power_rows,
    render_power_rows,
    render_report_rows,
    render_simulation_csv,
    render_simulation_table,
    report_row,
)
from .simulation import run_grid

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 2, 3


def _emit(text: str, out) -> None:
    if out is None or str(out) == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _methods(value: str) -> list[str]:
    methods = [m.strip().upper() for m in value.split(",") if m.strip()]
    bad = [m for m in methods if m not in ("SF", "ZC", "EB", "F")]
    if bad or not methods:
        raise argparse.ArgumentTypeError(f"unknown method(s): {', '.join(bad) or value!r}")
    return methods


def cmd_test(args) -> int:
    sample = load_sample(args.x, args.y, args.beta0)
    cfg = TestConfig(alpha=args.alpha, eb_permutations=args.permutations, rng_seed=args.seed)
    rows = []
    for method in args.methods:
        try:
            rows.append(report_row(run_test(method, sample, cfg)))
        except NotApplicableError as exc:
            rows.append(failed_report_row(method, "not_applicable", str(exc), cfg.alpha))
        except ValidationError as exc:
            if len(args.methods) == 1:
                raise
            rows.append(failed_report_row(method, "invalid", str(exc), cfg.alpha))
    _emit(render_report_rows(rows, args.format), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    grid = load_grid(args.grid)
    if args.seed is not None or args.replications is not None:
        changes = {}
        if args.seed is not None:
            changes["master_seed"] = args.seed
        if args.replications is not None:
            changes["replications"] = args.replications
        grid = [replace(cfg, **changes) for cfg in grid]

    def progress(done, total, cfg):
        print(f"[{done}/{total}] {cfg.label()}", file=sys.stderr, flush=True)

    results = run_grid(grid, threads=args.threads, progress=None if args.quiet else progress)
    text = render_simulation_csv(results) if args.format == "csv" else render_simulation_table(results)
    _emit(text, args.out)
    if args.figures:
        from .plotting import plot_simulation

        for path in plot_simulation(results, args.figures):
            print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def cmd_power(args) -> int:
    cases = load_power_cases(args.cases)
    rows = []
    for case in cases:
        rows.extend(power_rows(case, corrected_cross_term=args.corrected_cross_term))
    _emit(render_power_rows(rows, args.format), args.out)
    if args.figures:
        from .plotting import plot_power_cases

        for path in plot_power_cases(cases, args.figures):
            print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdregtest",
        description="Scale-invariant simultaneous tests for high-dimensional regression coefficients.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="-", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "table"), default="csv")

    t = sub.add_parser("test", parents=[common], help="run tests on CSV data")
    t.add_argument("--x", required=True, help="design matrix CSV (n rows, p columns)")
    t.add_argument("--y", required=True, help="response CSV (one column)")
    t.add_argument("--beta0", help="null coefficient CSV (one column; default all zero)")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--methods", type=_methods, default=["SF", "ZC", "EB", "F"],
                   help="comma-separated subset of sf,zc,eb,f")
    t.add_argument("--seed", type=int, default=DEFAULT_EB_SEED, help="seed for EB permutations")
    t.add_argument("--permutations", type=int, default=200, help="EB permutation count")
    t.set_defaults(func=cmd_test)

    s = sub.add_parser("simulate", parents=[common], help="run a Monte Carlo grid")
    s.add_argument("grid", help="grid TOML file, or a bundled name: paper-tables, smoke")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--seed", type=int, help="override master_seed of every cell")
    s.add_argument("--replications", type=int, help="override replications of every cell")
    s.add_argument("--figures", help="directory for power-curve PNGs")
    s.add_argument("--quiet", action="store_true", help="no progress on stderr")
    s.set_defaults(func=cmd_simulate)

    w = sub.add_parser("power", parents=[common], help="evaluate asymptotic power formulas")
    w.add_argument("cases", help="power case TOML file, or the bundled name comparison-cases")
    w.add_argument("--corrected-cross-term", action="store_true",
                   help="use sigma^2 instead of sigma^4 in the B1 cross term of the A1 variance")
    w.add_argument("--figures", help="directory for local-power PNGs")
    w.set_defaults(func=cmd_power)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except (ValidationError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
