"""Discounted lifetime utilities, loadings, and certainty equivalents.

Utility comparisons run under CRRA preferences with the subjective discount
rate equal to the risk-free rate. The loading of a cohort is the fractional
haircut on its stand-alone optimal design that would leave it indifferent
to joining the mixed pool: negative loadings mean the pool is a better deal.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mortality import EconomicParams, annuity_factor, life_grid
from .numerics import QuadratureGrid, integrate_values, solve_scalar
from .payout import PayoutFunction, crra_optimal_payout, natural_for_age
from .pool import JointBinomialEngine, ParticipationRates, PoolSpec

__all__ = [
    "crra_utility",
    "annuity_utility",
    "cohort_utility",
    "utility_loading",
    "LoadingReport",
    "loading_report",
    "certainty_equivalent",
]


def crra_utility(consumption, risk_aversion: float):
    """Constant-relative-risk-aversion utility; logarithmic at gamma = 1."""
    if risk_aversion <= 0:
        raise ValueError(f"risk aversion must be positive, got {risk_aversion}")
    c = np.asarray(consumption, dtype=float)
    if risk_aversion == 1.0:
        out = np.log(c)
    else:
        out = c ** (1.0 - risk_aversion) / (1.0 - risk_aversion)
    return out if out.ndim else float(out)


def annuity_utility(age: float, risk_aversion: float, premium: float, model,
                    econ: EconomicParams, grid: QuadratureGrid | None = None) -> float:
    """Lifetime utility of a fairly priced annuity bought for ``premium``.

    The optimal annuity pays the constant premium / a_x, so the utility is
    a_x * U(premium / a_x).
    """
    if premium <= 0:
        raise ValueError(f"premium must be positive, got {premium}")
    if grid is None:
        grid = life_grid(age)
    ann = annuity_factor(model, econ, age, grid)
    return ann * crra_utility(premium / ann, risk_aversion)


def cohort_utility(i: int, rates: ParticipationRates, payout: PayoutFunction,
                   pool: PoolSpec, model, econ: EconomicParams, risk_aversion: float,
                   grid: QuadratureGrid | None = None,
                   engine: JointBinomialEngine | None = None) -> float:
    """Discounted lifetime utility of one member of cohort i.

    The member's consumption rate is the pool disbursement times their share
    of the live shares; the expectation over the other members' survivor
    counts is evaluated exactly at every node.
    """
    gamma = float(risk_aversion)
    if gamma <= 0:
        raise ValueError(f"risk aversion must be positive, got {gamma}")
    grid = grid or payout.grid
    engine = engine or JointBinomialEngine(pool, model, grid)
    nodes = grid.nodes
    coeffs = rates.rates * pool.investments
    # numerator of consumption: total disbursement scaled by own shares
    own = pool.total_wealth * payout(nodes) * rates.rates[i] * pool.investments[i]
    if gamma == 1.0:
        profile = engine.conditional_expectation(coeffs, i, np.log)
        inner = np.log(own) - profile
    else:
        profile = engine.conditional_expectation(coeffs, i, lambda d: d ** (gamma - 1.0))
        inner = own ** (1.0 - gamma) * profile / (1.0 - gamma)
    return integrate_values(econ.discount(nodes) * engine.survival[i] * inner, grid)


def _stand_alone_utility(cohort_index: int, pool: PoolSpec, model, econ: EconomicParams,
                         gamma: float, steps: int, haircut: float = 0.0,
                         engine: JointBinomialEngine | None = None):
    """Utility of the cohort pooling alone under its own optimal design.

    Members invest (1 - haircut) times their stake. Returns the utility and
    the engine so repeated evaluations can share the pmf tables.
    """
    c = pool.cohorts[cohort_index]
    bench_grid = life_grid(c.age, steps)
    alone = PoolSpec.homogeneous(c.age, c.investment * (1.0 - haircut), c.count)
    if engine is None:
        engine = JointBinomialEngine(alone, model, bench_grid)
    optimal = crra_optimal_payout(c.count, gamma, c.age, model, econ, bench_grid)
    value = cohort_utility(
        0, ParticipationRates(np.ones(1)), optimal, alone, model, econ, gamma,
        grid=bench_grid, engine=engine,
    )
    return value, engine, bench_grid


def utility_loading(i: int, rates: ParticipationRates, payout: PayoutFunction,
                    pool: PoolSpec, model, econ: EconomicParams,
                    risk_aversion: float = 1.0,
                    grid: QuadratureGrid | None = None,
                    engine: JointBinomialEngine | None = None) -> float:
    """Haircut on cohort i's stand-alone optimal design matching its pooled utility.

    For log utility the CRRA homogeneity gives the closed form
    1 - exp((U_pool - U_alone) / a_x); otherwise the defining equation is
    solved by bisection.
    """
    gamma = float(risk_aversion)
    grid = grid or payout.grid
    pooled = cohort_utility(i, rates, payout, pool, model, econ, gamma, grid, engine)
    alone0, bench_engine, bench_grid = _stand_alone_utility(i, pool, model, econ, gamma, grid.steps)
    if gamma == 1.0:
        ann = annuity_factor(model, econ, pool.cohorts[i].age, bench_grid)
        return 1.0 - float(np.exp((pooled - alone0) / ann))

    def gap(haircut: float) -> float:
        alone, _, _ = _stand_alone_utility(
            i, pool, model, econ, gamma, grid.steps, haircut, bench_engine
        )
        return pooled - alone

    lo = -1.0
    while gap(lo) > 0:
        lo = 2.0 * lo - 1.0
        if lo < -1e6:
            raise RuntimeError(f"could not bracket the loading (reached haircut {lo})")
    return solve_scalar(gap, lo, 1.0 - 1e-9, tol=1e-10)


@dataclass(frozen=True)
class LoadingReport:
    """Per-cohort loadings in basis points against stand-alone optimal tontines."""

    loadings_bp: tuple[float, ...]
    risk_aversion: float
    benchmark: str


def loading_report(rates: ParticipationRates, payout: PayoutFunction, pool: PoolSpec,
                   model, econ: EconomicParams, risk_aversion: float = 1.0,
                   grid: QuadratureGrid | None = None) -> LoadingReport:
    grid = grid or payout.grid
    engine = JointBinomialEngine(pool, model, grid)
    loadings = tuple(
        1e4 * utility_loading(i, rates, payout, pool, model, econ, risk_aversion, grid, engine)
        for i in range(pool.num_cohorts)
    )
    return LoadingReport(
        loadings_bp=loadings,
        risk_aversion=risk_aversion,
        benchmark=f"stand-alone crra-optimal tontine per cohort (gamma={risk_aversion:g})",
    )


def certainty_equivalent(design, pool: PoolSpec, risk_aversion: float, model,
                         econ: EconomicParams, grid: QuadratureGrid | None = None,
                         benchmark_premium: float = 100.0) -> float:
    """Investment in ``design`` matching the utility of an annuity premium.

    ``design`` is a :class:`PayoutFunction` (a tontine the homogeneous pool
    subscribes to at equal rates), the string ``"gsa"`` (valued through its
    deterministic equivalence with the natural schedule), or ``"annuity"``.
    CRRA homogeneity makes the answer independent of the pool's per-head
    stake, so the equivalent has a closed form given the two utilities.
    """
    gamma = float(risk_aversion)
    if pool.num_cohorts != 1:
        raise ValueError("certainty equivalents are defined for single-cohort pools")
    cohort = pool.cohorts[0]
    if grid is None:
        grid = life_grid(cohort.age)
    if isinstance(design, str) and design == "annuity":
        return float(benchmark_premium)
    if isinstance(design, str) and design == "gsa":
        if gamma >= 2.0:
            raise ValueError(
                "gsa utility diverges for risk aversion >= 2 as the horizon grows;"
                " certainty equivalent undefined"
            )
        design = natural_for_age(cohort.age, model, econ, grid)
    if not isinstance(design, PayoutFunction):
        raise ValueError(f"unknown design {design!r}")
    unit_pool = PoolSpec.homogeneous(cohort.age, 1.0, cohort.count)
    unit_utility = cohort_utility(
        0, ParticipationRates(np.ones(1)), design, unit_pool, model, econ, gamma, grid
    )
    bench = annuity_utility(cohort.age, gamma, benchmark_premium, model, econ, grid)
    if gamma == 1.0:
        ann = annuity_factor(model, econ, cohort.age, grid)
        return float(np.exp((bench - unit_utility) / ann))
    return float((bench / unit_utility) ** (1.0 / (1.0 - gamma)))
