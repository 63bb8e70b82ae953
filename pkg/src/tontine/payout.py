"""Construction of budget-feasible total payout schedules.

A payout schedule d(t) is the rate at which the pool disburses cash per
initial dollar invested. Every constructor here scales its schedule so the
discounted integral over the construction grid equals one: the initial
capital, invested at the risk-free rate, funds the schedule exactly with
nothing set aside for longevity risk.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.stats import binom

from .mortality import EconomicParams, annuity_factor
from .numerics import QuadratureGrid, integrate_values
from .pool import ParticipationRates, PoolSpec

__all__ = [
    "PayoutFunction",
    "flat_payout",
    "crra_share_factor",
    "crra_optimal_payout",
    "natural_for_age",
    "proportional_payout",
    "natural_payout",
    "annuity_rates",
    "payout_to_csv",
]


@dataclass(frozen=True)
class PayoutFunction:
    """Total payout rate d(t) per initial pool dollar.

    Carries the grid and rate used for normalization so the budget identity
    can be re-verified exactly: ``budget_value()`` should return 1.
    """

    kind: str
    grid: QuadratureGrid
    econ: EconomicParams
    rate_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def __call__(self, t):
        out = np.asarray(self.rate_fn(np.asarray(t, dtype=float)), dtype=float)
        return out if out.ndim else float(out)

    def node_values(self) -> np.ndarray:
        return self(self.grid.nodes)

    def budget_value(self) -> float:
        """Discounted value of the whole schedule on its own grid."""
        t = self.grid.nodes
        return integrate_values(self.econ.discount(t) * self(t), self.grid)


def flat_payout(econ: EconomicParams, grid: QuadratureGrid) -> PayoutFunction:
    """Constant payout rate funded exactly over the (truncated) horizon.

    The level is r / (1 - e^(-rT)); as T grows it approaches r, the rate a
    perpetuity would support.
    """
    T = grid.horizon
    if econ.rate == 0.0:
        level = 1.0 / T
    else:
        level = econ.rate / -np.expm1(-econ.rate * T)
    return PayoutFunction("flat", grid, econ, lambda t: np.full_like(np.asarray(t, float), level))


def crra_share_factor(count: int, risk_aversion: float, p):
    """E[(count / N)^(1 - gamma); member alive], N - 1 ~ Binomial(count - 1, p).

    The expected CRRA-weighted share of one member of a pool of ``count``
    lives that each survive independently with probability ``p``. Equals p
    itself for log utility (gamma = 1) and reaches 1 at p = 1.
    """
    if risk_aversion <= 0:
        raise ValueError(f"risk aversion must be positive, got {risk_aversion}")
    p_arr = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(p_arr < 0) or np.any(p_arr > 1):
        raise ValueError("survival probability must lie in [0, 1]")
    k = np.arange(count)
    pmf = binom.pmf(k[None, :], count - 1, p_arr[:, None])
    # (count / (k+1))^(1-gamma) in log space; stable for large counts and gammas
    share = np.exp((1.0 - risk_aversion) * (np.log(count) - np.log1p(k)))
    out = p_arr * (pmf * share[None, :]).sum(axis=1)
    return out if np.ndim(p) else float(out[0])


def crra_optimal_payout(
    count: int,
    risk_aversion: float,
    age: float,
    model,
    econ: EconomicParams,
    grid: QuadratureGrid,
) -> PayoutFunction:
    """Payout schedule maximizing CRRA lifetime utility for one homogeneous cohort.

    d(t) is proportional to the share factor raised to 1/gamma, scaled to
    satisfy the budget constraint on ``grid``.
    """
    gamma = float(risk_aversion)

    def shape(t):
        return crra_share_factor(count, gamma, model.survival(age, t)) ** (1.0 / gamma)

    t = grid.nodes
    scale = 1.0 / integrate_values(econ.discount(t) * shape(t), grid)
    return PayoutFunction(f"crra:{gamma:g}", grid, econ, lambda tt: scale * shape(tt))


def natural_for_age(age: float, model, econ: EconomicParams, grid: QuadratureGrid) -> PayoutFunction:
    """Payout proportional to the cohort's expected survivors: d(t) = p(t) / a_x.

    Optimal for log utility in a homogeneous pool; the schedule one annuity
    dollar would generate if mortality exactly matched expectation.
    """
    ann = annuity_factor(model, econ, age, grid)
    return PayoutFunction(
        f"natural-age:{age:g}", grid, econ, lambda t: model.survival(age, t) / ann
    )


def annuity_rates(pool: PoolSpec, model, econ: EconomicParams, grid: QuadratureGrid) -> ParticipationRates:
    """Rates 1/a_x per cohort: the stand-alone annuity price of lifetime income."""
    factors = np.array([annuity_factor(model, econ, c.age, grid) for c in pool.cohorts])
    return ParticipationRates(1.0 / factors, "annuity")


def proportional_payout(
    pool: PoolSpec, model, econ: EconomicParams, grid: QuadratureGrid
) -> tuple[PayoutFunction, ParticipationRates]:
    """Wealth-weighted mix of each cohort's natural schedule, with annuity rates.

    Asymptotically every surviving member collects 1/a_x per dollar forever,
    i.e. the pool replicates a portfolio of fair annuities; in finite pools
    the rates are only approximately equitable.
    """
    factors = np.array([annuity_factor(model, econ, c.age, grid) for c in pool.cohorts])
    weights = pool.counts * pool.investments / pool.total_wealth

    def rate(t):
        t = np.asarray(t, dtype=float)
        parts = np.stack([model.survival(c.age, t) for c in pool.cohorts])
        return np.tensordot(weights / factors, parts, axes=(0, 0))

    payout = PayoutFunction("proportional", grid, econ, rate)
    return payout, ParticipationRates(1.0 / factors, "annuity")


def natural_payout(
    pool: PoolSpec, rates: ParticipationRates, model, econ: EconomicParams, grid: QuadratureGrid
) -> PayoutFunction:
    """Payout proportional to the expected number of surviving shares.

    d(t) = sum_i share_i * p_i(t) / sum_j a_j * share_j with share_j the
    cohort's total shares; invariant to a common rescaling of the rates.
    """
    factors = np.array([annuity_factor(model, econ, c.age, grid) for c in pool.cohorts])
    shares = rates.rates * pool.investments * pool.counts
    scale = shares / float(factors @ shares)

    def rate(t):
        t = np.asarray(t, dtype=float)
        parts = np.stack([model.survival(c.age, t) for c in pool.cohorts])
        return np.tensordot(scale, parts, axes=(0, 0))

    return PayoutFunction("natural", grid, econ, rate)


def payout_to_csv(payout: PayoutFunction) -> str:
    """Schedule values at the grid nodes as ``t,payout_rate`` rows."""
    lines = ["t,payout_rate"]
    for t, d in zip(payout.grid.nodes, payout.node_values()):
        lines.append(f"{t:.10g},{d:.10g}")
    return "\n".join(lines) + "\n"
