"""Benchmark tables, sensitivity curves, and simulated figure data.

Each builder returns ``(header, rows)`` ready for :func:`write_csv`; the
``fig-*`` datasets can additionally be rendered to PNG with
:func:`render_figure`. Defaults reproduce the package's golden test grids.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .equity import InfeasiblePoolError, solve_equitable, solve_natural_equitable
from .mortality import EconomicParams, GompertzMortality
from .payout import natural_for_age, crra_optimal_payout, proportional_payout
from .pool import ParticipationRates, PoolSpec, pool_grid
from .sim import simulate_gsa, simulate_tontine
from .welfare import certainty_equivalent, loading_report

__all__ = [
    "TABLE_IDS",
    "FIGURE_IDS",
    "two_cohort_table",
    "three_cohort_table",
    "certainty_equivalent_table",
    "age_outlier_curve",
    "wealth_outlier_curve",
    "payout_path_data",
    "gsa_vs_proportional_data",
    "write_csv",
    "render_figure",
]

TABLE_IDS = ("table-ce", "table-2cohort", "table-3cohort")
FIGURE_IDS = (
    "fig-age-outlier",
    "fig-wealth-outlier",
    "fig-payout-path",
    "fig-gsa-vs-proportional",
)

_DEFAULT_CURVE_SIZES = (1, 2, 3, 5, 8, 12, 20, 35, 60, 100)


def _two_cohort_designs(pool, model, econ, grid):
    """Designs compared in the two-cohort grid, with their rate vectors."""
    young, old = pool.cohorts[0].age, pool.cohorts[1].age
    for kind in (f"natural-age:{young:g}", "natural", "proportional", f"natural-age:{old:g}"):
        if kind == "natural":
            rates, payout = solve_natural_equitable(pool, model, econ, grid)
        elif kind == "proportional":
            payout, rates = proportional_payout(pool, model, econ, grid)
        else:
            age = float(kind.split(":")[1])
            payout = natural_for_age(age, model, econ, grid)
            rates = solve_equitable(payout, pool, model, econ, grid)
        yield kind, payout, rates


def two_cohort_table(model: GompertzMortality, econ: EconomicParams,
                     sizes: Sequence[int] = (1, 5, 10, 50), steps: int = 400,
                     ages: tuple[float, float] = (65.0, 75.0)):
    """Equitable rates and log-utility loadings for two equal-size cohorts.

    Rates are normalized so the first cohort's rate is 1; loadings are in
    basis points against each cohort's stand-alone optimal tontine.
    """
    header = ["design", "n1", "n2", "pi2", "loading1_bp", "loading2_bp"]
    rows = []
    for n in sizes:
        pool = PoolSpec.from_rows([(ages[0], 1.0, n), (ages[1], 1.0, n)])
        grid = pool_grid(pool, steps)
        for kind, payout, rates in _two_cohort_designs(pool, model, econ, grid):
            anchored = rates.normalized(0)
            loadings = loading_report(anchored, payout, pool, model, econ, 1.0, grid)
            rows.append([kind, n, n, anchored.rates[1], *loadings.loadings_bp])
    return header, rows


def three_cohort_table(model: GompertzMortality, econ: EconomicParams,
                       blocks: Sequence[tuple[int, int, int]] = ((5, 10, 5), (10, 20, 10), (20, 40, 20)),
                       steps: int = 400,
                       ages: tuple[float, float, float] = (60.0, 65.0, 70.0)):
    """Rates and loadings for three cohorts; rates normalized to the middle cohort."""
    header = [
        "design", "n1", "n2", "n3",
        "pi1", "pi2", "pi3",
        "loading1_bp", "loading2_bp", "loading3_bp",
    ]
    rows = []
    for block in blocks:
        pool = PoolSpec.from_rows([(age, 1.0, n) for age, n in zip(ages, block)])
        grid = pool_grid(pool, steps)
        for kind in (f"natural-age:{ages[1]:g}", "natural", "proportional"):
            if kind == "natural":
                rates, payout = solve_natural_equitable(pool, model, econ, grid)
            elif kind == "proportional":
                payout, rates = proportional_payout(pool, model, econ, grid)
            else:
                payout = natural_for_age(ages[1], model, econ, grid)
                rates = solve_equitable(payout, pool, model, econ, grid)
            anchored = rates.normalized(1)
            loadings = loading_report(anchored, payout, pool, model, econ, 1.0, grid)
            rows.append([kind, *block, *anchored.rates, *loadings.loadings_bp])
    return header, rows


def certainty_equivalent_table(model: GompertzMortality, econ: EconomicParams,
                               sizes: Sequence[int] = (10, 100),
                               gammas: Sequence[float] = (0.5, 1.0, 2.0, 5.0),
                               steps: int = 400, age: float = 65.0):
    """Stake in each pooling design matching the utility of a $100 annuity.

    The optimal tontine is valued for every risk aversion; the GSA only
    below gamma = 2 (its utility diverges beyond); the log-optimal fund only
    at gamma = 1 (its optimal control is not specified elsewhere). Absent
    combinations are omitted.
    """
    header = ["design", "gamma", "n", "certainty_equivalent"]
    rows = []
    for gamma in gammas:
        for n in sizes:
            pool = PoolSpec.homogeneous(age, 1.0, n)
            grid = pool_grid(pool, steps)
            tontine = crra_optimal_payout(n, gamma, age, model, econ, grid)
            if gamma == 1.0:
                rows.append([
                    "paf-log", gamma, n,
                    certainty_equivalent(natural_for_age(age, model, econ, grid),
                                         pool, gamma, model, econ, grid),
                ])
            rows.append([
                "optimal-tontine", gamma, n,
                certainty_equivalent(tontine, pool, gamma, model, econ, grid),
            ])
            if gamma < 2.0:
                rows.append([
                    "gsa", gamma, n,
                    certainty_equivalent("gsa", pool, gamma, model, econ, grid),
                ])
    return header, rows


def age_outlier_curve(model: GompertzMortality, econ: EconomicParams,
                      base_age: float = 65.0,
                      outlier_ages: Sequence[float] = (70.0, 75.0, 80.0, 85.0),
                      sizes: Sequence[int] = _DEFAULT_CURVE_SIZES, steps: int = 400):
    """Outlier's equitable rate vs base-cohort size, one curve per outlier age.

    A single outlier (one head, $1) joins n1 members aged ``base_age`` in a
    schedule natural for the base age; rates normalized so the base cohort
    pays par. Infeasible combinations are omitted.
    """
    header = ["outlier_age", "n1", "pi2"]
    rows = []
    for age2 in outlier_ages:
        for n1 in sizes:
            pool = PoolSpec.from_rows([(base_age, 1.0, n1), (age2, 1.0, 1)])
            grid = pool_grid(pool, steps)
            payout = natural_for_age(base_age, model, econ, grid)
            try:
                rates = solve_equitable(payout, pool, model, econ, grid, anchor=0)
            except InfeasiblePoolError:
                continue
            rows.append([age2, n1, rates.rates[1]])
    return header, rows


def wealth_outlier_curve(model: GompertzMortality, econ: EconomicParams,
                         age: float = 65.0,
                         outlier_investments: Sequence[float] = (2.0, 5.0, 10.0, 20.0),
                         sizes: Sequence[int] = _DEFAULT_CURVE_SIZES, steps: int = 400):
    """Outlier's equitable rate vs cohort size when only the stake differs."""
    header = ["outlier_investment", "n1", "pi2"]
    rows = []
    for w2 in outlier_investments:
        for n1 in sizes:
            pool = PoolSpec.from_rows([(age, 1.0, n1), (age, w2, 1)])
            grid = pool_grid(pool, steps)
            payout = natural_for_age(age, model, econ, grid)
            try:
                rates = solve_equitable(payout, pool, model, econ, grid, anchor=0)
            except InfeasiblePoolError:
                continue
            rows.append([w2, n1, rates.rates[1]])
    return header, rows


def payout_path_data(model: GompertzMortality, econ: EconomicParams, seed: int = 1,
                     steps: int = 400,
                     pool: PoolSpec | None = None):
    """One simulated payout path of a natural and equitable two-cohort design."""
    if pool is None:
        pool = PoolSpec.from_rows([(65.0, 1.0, 200), (85.0, 1.0, 50)])
    grid = pool_grid(pool, steps)
    rates, payout = solve_natural_equitable(pool, model, econ, grid)
    path = simulate_tontine(pool, payout, rates, model, seed)
    header = ["t", "total_payout"]
    for j in range(pool.num_cohorts):
        header += [f"survivors_{j + 1}", f"per_survivor_{j + 1}"]
    rows = []
    for k, t in enumerate(path.times):
        row = [t, path.total_rate[k]]
        for j in range(pool.num_cohorts):
            row += [int(path.survivors[k, j]), path.per_survivor[k, j]]
        rows.append(row)
    return header, rows


def gsa_vs_proportional_data(model: GompertzMortality, econ: EconomicParams,
                             seed: int = 1, dt: float = 1.0 / 12.0, steps: int = 400,
                             pool: PoolSpec | None = None):
    """Per-period GSA payments next to the proportional tontine's schedule."""
    if pool is None:
        pool = PoolSpec.from_rows([(65.0, 1.0, 5), (75.0, 1.0, 5)])
    grid = pool_grid(pool, steps)
    payout, _ = proportional_payout(pool, model, econ, grid)
    path = simulate_gsa(pool, model, econ, seed, dt)
    tontine_payment = pool.total_wealth * payout(path.times) * dt
    header = ["t", "gsa_payment", "tontine_payment", "survivors_1", "survivors_2"]
    rows = [
        [t, path.total_payments[k], tontine_payment[k],
         int(path.survivors[k, 0]), int(path.survivors[k, 1])]
        for k, t in enumerate(path.times)
    ]
    return header, rows


def write_csv(header: Sequence[str], rows: Iterable[Sequence], sig: int = 6) -> str:
    """Render rows as CSV text with floats at ``sig`` significant digits."""

    def fmt(cell):
        if isinstance(cell, (float, np.floating)):
            return f"{cell:.{sig}g}"
        return str(cell)

    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(cell) for cell in row))
    return "\n".join(lines) + "\n"


def render_figure(fig_id: str, header: Sequence[str], rows: Sequence[Sequence], path) -> None:
    """Render a fig-* dataset to an image file."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if fig_id not in FIGURE_IDS:
        raise ValueError(f"unknown figure id {fig_id!r}")
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    data = np.array([[float(c) for c in row] for row in rows])
    if fig_id in ("fig-age-outlier", "fig-wealth-outlier"):
        label = "age" if fig_id == "fig-age-outlier" else "stake"
        for key in np.unique(data[:, 0]):
            block = data[data[:, 0] == key]
            ax.plot(block[:, 1], block[:, 2], marker="o", label=f"outlier {label} {key:g}")
        ax.set_xscale("log")
        ax.set_xlabel("size of the base cohort")
        ax.set_ylabel("outlier participation rate (base cohort = 1)")
        ax.legend()
    elif fig_id == "fig-payout-path":
        ax.plot(data[:, 0], data[:, 3], label="per survivor, cohort 1")
        ax.plot(data[:, 0], data[:, 5], label="per survivor, cohort 2")
        ax.set_xlabel("years")
        ax.set_ylabel("payout rate per survivor")
        ax.legend()
    else:  # fig-gsa-vs-proportional
        ax.plot(data[:, 0], data[:, 1], label="GSA payment", lw=0.8)
        ax.plot(data[:, 0], data[:, 2], label="proportional tontine", lw=1.4)
        ax.set_xlabel("years")
        ax.set_ylabel("total payment per period")
        ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
