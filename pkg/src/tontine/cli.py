"""Command-line interface: quote share prices for a pool and reproduce benchmarks.

Examples
--------
Quote equitable share prices for a pool file::

    tontine quote --pool pool.csv --design natural --out quote.csv

Emit a benchmark grid (and, for fig-* ids with --out, a PNG next to it)::

    tontine reproduce table-2cohort --out table.csv
    tontine reproduce fig-gsa-vs-proportional --seed 7 --out fig5.csv

Every flag can also be set through an environment variable named
TONTINE_<FLAG> (e.g. TONTINE_RATE=0.03, TONTINE_STEPS=800).
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import report
from .equity import (
    ConvergenceError,
    InfeasiblePoolError,
    equity_report,
    equity_report_to_csv,
    solve_equitable,
    solve_natural_equitable,
)
from .mortality import (
    DEFAULT_DISPERSION,
    DEFAULT_MODE_AGE,
    DEFAULT_RATE,
    MAX_AGE,
    EconomicParams,
    GompertzMortality,
)
from .payout import crra_optimal_payout, flat_payout, natural_for_age, proportional_payout
from .pool import pool_grid, read_pool_csv

__all__ = ["main", "entry_point"]

_ENV_PREFIX = "TONTINE_"


def _env(flag: str, fallback):
    return os.environ.get(_ENV_PREFIX + flag, fallback)


def _parse_gompertz(text: str) -> tuple[float, float]:
    try:
        mode_age, dispersion = (float(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected m,b (e.g. 88.72,10), got {text!r}"
        ) from None
    return mode_age, dispersion


def _parse_sizes(text: str):
    blocks = [blk for blk in text.split(";") if blk.strip()]
    parsed = [tuple(int(v) for v in blk.split(",")) for blk in blocks]
    if all(len(b) == 1 for b in parsed):
        return [b[0] for b in parsed]
    return parsed


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--rate", type=float, default=float(_env("RATE", DEFAULT_RATE)),
                        help="risk-free rate, continuously compounded (default 0.04)")
    parser.add_argument("--gompertz", type=_parse_gompertz,
                        default=_parse_gompertz(_env("GOMPERTZ", f"{DEFAULT_MODE_AGE},{DEFAULT_DISPERSION}")),
                        metavar="M,B", help="Gompertz modal age and dispersion (default 88.72,10)")
    parser.add_argument("--steps", type=int, default=int(_env("STEPS", 400)),
                        help="Simpson intervals per integral (default 400)")
    parser.add_argument("--horizon-age", type=float, default=float(_env("HORIZON_AGE", MAX_AGE)),
                        help="age at which integrals are truncated (default 130)")
    parser.add_argument("--seed", type=int, default=int(_env("SEED", 1)),
                        help="PRNG seed for simulated outputs (default 1)")
    parser.add_argument("--out", type=Path, default=_env("OUT", None),
                        help="output CSV path (default: stdout)")


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _build_payout(design: str, gamma: float, pool, model, econ, grid):
    if design == "flat":
        return flat_payout(econ, grid)
    if design == "proportional":
        return proportional_payout(pool, model, econ, grid)[0]
    if design.startswith("natural-age:"):
        return natural_for_age(float(design.split(":", 1)[1]), model, econ, grid)
    if design == "crra" or design.startswith("crra:"):
        g = float(design.split(":", 1)[1]) if ":" in design else gamma
        ages = set(c.age for c in pool.cohorts)
        if len(ages) != 1:
            raise ValueError("the crra design needs a single-age pool")
        return crra_optimal_payout(pool.total_heads, g, ages.pop(), model, econ, grid)
    raise ValueError(
        f"unknown design {design!r}; expected flat, natural, proportional,"
        " natural-age:<x> or crra:<gamma>"
    )


def cmd_quote(args: argparse.Namespace) -> int:
    model = GompertzMortality(*args.gompertz)
    econ = EconomicParams(args.rate)
    pool = read_pool_csv(args.pool)
    grid = pool_grid(pool, steps=args.steps, max_age=args.horizon_age)
    try:
        if args.design == "natural":
            rates, payout = solve_natural_equitable(pool, model, econ, grid)
        else:
            payout = _build_payout(args.design, args.gamma, pool, model, econ, grid)
            rates = solve_equitable(payout, pool, model, econ, grid)
    except InfeasiblePoolError as exc:
        print(f"infeasible pool: {exc}", file=sys.stderr)
        for cond in exc.report.violations:
            members = ",".join(str(k + 1) for k in cond.subset)
            print(
                f"  cohorts {{{members}}}: contingent value {cond.value:.6g}"
                f" >= bound {cond.bound:.6g} (margin {cond.margin:.3g})",
                file=sys.stderr,
            )
        return 1
    except ConvergenceError as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return 1
    summary = equity_report(payout, pool, rates, model, econ, grid)
    _emit(equity_report_to_csv(summary), args.out)
    return 0


def cmd_reproduce(args: argparse.Namespace) -> int:
    model = GompertzMortality(*args.gompertz)
    econ = EconomicParams(args.rate)
    sizes = _parse_sizes(args.sizes) if args.sizes else None
    rid = args.id
    if rid == "table-2cohort":
        header, rows = report.two_cohort_table(model, econ, sizes or (1, 5, 10, 50), args.steps)
    elif rid == "table-3cohort":
        header, rows = report.three_cohort_table(
            model, econ, sizes or ((5, 10, 5), (10, 20, 10), (20, 40, 20)), args.steps
        )
    elif rid == "table-ce":
        header, rows = report.certainty_equivalent_table(model, econ, sizes or (10, 100), steps=args.steps)
    elif rid == "fig-age-outlier":
        header, rows = report.age_outlier_curve(model, econ, sizes=sizes or report._DEFAULT_CURVE_SIZES,
                                                steps=args.steps)
    elif rid == "fig-wealth-outlier":
        header, rows = report.wealth_outlier_curve(model, econ, sizes=sizes or report._DEFAULT_CURVE_SIZES,
                                                   steps=args.steps)
    elif rid == "fig-payout-path":
        header, rows = report.payout_path_data(model, econ, seed=args.seed, steps=args.steps)
    elif rid == "fig-gsa-vs-proportional":
        header, rows = report.gsa_vs_proportional_data(model, econ, seed=args.seed, steps=args.steps)
    else:
        print(f"unknown id {rid!r}; choose from "
              f"{', '.join(report.TABLE_IDS + report.FIGURE_IDS)}", file=sys.stderr)
        return 2
    _emit(report.write_csv(header, rows), args.out)
    if rid in report.FIGURE_IDS and args.out is not None and not args.no_plot:
        png = Path(args.out).with_suffix(".png")
        report.render_figure(rid, header, rows, png)
        print(f"figure written to {png}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tontine",
        description="Equitable multi-cohort retirement income tontines",
        epilog=f"Flags may be set via environment variables {_ENV_PREFIX}<FLAG>.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    quote = sub.add_parser("quote", help="price a pool: share prices, shares, present values")
    quote.add_argument("--pool", required=_env("POOL", None) is None,
                       default=_env("POOL", None),
                       help="pool CSV with header age,investment,count")
    quote.add_argument("--design", default=_env("DESIGN", "natural"),
                       help="flat | natural | proportional | natural-age:<x> | crra:<gamma>")
    quote.add_argument("--gamma", type=float, default=float(_env("GAMMA", 1.0)),
                       help="risk aversion for the crra design (default 1)")
    _add_common(quote)
    quote.set_defaults(func=cmd_quote)

    rep = sub.add_parser("reproduce", help="emit a benchmark table or figure dataset")
    rep.add_argument("id", choices=report.TABLE_IDS + report.FIGURE_IDS, metavar="ID",
                     help=f"one of: {', '.join(report.TABLE_IDS + report.FIGURE_IDS)}")
    rep.add_argument("--sizes", default=_env("SIZES", None),
                     help="override size grid, e.g. '1,5,10' or '5,10,5;10,20,10'")
    rep.add_argument("--no-plot", action="store_true",
                     help="skip the PNG that fig-* ids write next to --out")
    _add_common(rep)
    rep.set_defaults(func=cmd_reproduce)

    args = parser.parse_args(argv)
    return args.func(args)


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
