"""Present values per invested dollar, the equity test, and rate solvers.

A rate vector is *equitable* when every cohort's expected present value per
dollar invested is the same. Because payouts scheduled after the last death
stay with the sponsor, that common value is 1 - epsilon rather than 1; no
choice of rates can push it higher for everyone.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import chain, combinations

import numpy as np

from .mortality import EconomicParams
from .numerics import QuadratureGrid, integrate_values
from .payout import PayoutFunction, annuity_rates, natural_payout
from .pool import JointBinomialEngine, ParticipationRates, PoolSpec, wealth_fraction

__all__ = [
    "InfeasiblePoolError",
    "ConvergenceError",
    "SubsetCondition",
    "FeasibilityReport",
    "EquityReport",
    "Valuation",
    "leftover_value",
    "present_values",
    "inequity",
    "check_existence",
    "solve_equitable",
    "solve_natural_equitable",
    "equity_report",
    "equity_report_to_csv",
]


class InfeasiblePoolError(ValueError):
    """No positive finite rate vector can equalize the cohort present values."""

    def __init__(self, report: "FeasibilityReport"):
        self.report = report
        worst = report.worst
        detail = ""
        if worst is not None:
            members = ",".join(str(k + 1) for k in worst.subset)
            detail = (
                f": cohorts {{{members}}} would collect {worst.value:.6g}"
                f" against a wealth-share bound of {worst.bound:.6g}"
            )
        super().__init__("pool cannot be made equitable" + detail)


class ConvergenceError(RuntimeError):
    """Solver failed to reach the requested tolerance."""

    def __init__(self, message: str, inequity: float | None = None, trace=None):
        self.inequity = inequity
        self.trace = trace
        super().__init__(message)


@dataclass(frozen=True)
class SubsetCondition:
    """One strict inequality from the equity existence test.

    ``value`` is the discounted payout collectable by the subset's cohorts
    after everyone else has died; equity requires it to stay below
    ``bound``, the subset's wealth share of the total collectable value.
    """

    subset: tuple[int, ...]
    value: float
    bound: float

    @property
    def margin(self) -> float:
        return self.bound - self.value

    @property
    def satisfied(self) -> bool:
        return self.value < self.bound


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    epsilon: float
    conditions: tuple[SubsetCondition, ...]

    @property
    def violations(self) -> tuple[SubsetCondition, ...]:
        return tuple(c for c in self.conditions if not c.satisfied)

    @property
    def worst(self) -> SubsetCondition | None:
        if not self.conditions:
            return None
        return min(self.conditions, key=lambda c: c.margin)


@dataclass(frozen=True)
class EquityReport:
    """Valuation of one rate vector: per-cohort present values and summary."""

    pool: PoolSpec
    rates: ParticipationRates
    values: np.ndarray
    epsilon: float
    theta: float
    feasible: bool
    violations: tuple[SubsetCondition, ...]


class Valuation:
    """Caches everything needed to revalue a pool under varying rates.

    Binding a payout schedule, pool, mortality model, and grid fixes the
    survivor-count pmfs and the discounted payout profile; each rate vector
    then costs one joint-support contraction per cohort.
    """

    def __init__(self, payout: PayoutFunction, pool: PoolSpec, model,
                 econ: EconomicParams, grid: QuadratureGrid | None = None):
        self.grid = grid or payout.grid
        self.pool = pool
        self.engine = JointBinomialEngine(pool, model, self.grid)
        nodes = self.grid.nodes
        self.payout_values = payout(nodes)
        discounted = econ.discount(nodes) * self.payout_values
        self._weighted = self.grid.weights() * discounted * pool.total_wealth
        self.epsilon = float(
            (self.grid.weights() * discounted) @ self.engine.all_dead_profile()
        )
        self.target = 1.0 - self.epsilon

    def present_value(self, rates: np.ndarray, i: int) -> float:
        """Expected discounted payout per dollar invested by cohort i."""
        coeffs = rates * self.pool.investments
        profile = self.engine.conditional_expectation(coeffs, i, np.reciprocal)
        return float((self._weighted * self.engine.survival[i] * rates[i]) @ profile)

    def present_values(self, rates: np.ndarray) -> np.ndarray:
        return np.array([self.present_value(rates, i) for i in range(self.pool.num_cohorts)])


def leftover_value(payout: PayoutFunction, pool: PoolSpec, model,
                   econ: EconomicParams, grid: QuadratureGrid | None = None) -> float:
    """Present value of payouts scheduled after the last death (sponsor's windfall)."""
    grid = grid or payout.grid
    t = grid.nodes
    q = np.stack([model.death_probability(c.age, t) for c in pool.cohorts])
    all_dead = np.prod(q ** pool.counts[:, None], axis=0)
    return integrate_values(econ.discount(t) * payout(t) * all_dead, grid)


def present_values(rates: ParticipationRates, payout: PayoutFunction, pool: PoolSpec,
                   model, econ: EconomicParams, grid: QuadratureGrid | None = None) -> np.ndarray:
    """Per-cohort expected present value per dollar invested."""
    return Valuation(payout, pool, model, econ, grid).present_values(rates.rates)


def inequity(values: np.ndarray) -> float:
    """Largest pairwise gap between cohort present values (0 for one cohort)."""
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if len(values) < 2:
        return 0.0
    return float(values.max() - values.min())


def _proper_subsets(k: int):
    return chain.from_iterable(combinations(range(k), size) for size in range(1, k))


def check_existence(payout: PayoutFunction, pool: PoolSpec, model,
                    econ: EconomicParams, grid: QuadratureGrid | None = None) -> FeasibilityReport:
    """Evaluate every subset condition for the existence of equitable rates.

    Rates exist iff, for every proper subset of cohorts, the value collectable
    after the complement dies out stays strictly below the subset's wealth
    share of the total collectable value. A single cohort is always feasible.
    """
    grid = grid or payout.grid
    t = grid.nodes
    discounted = econ.discount(t) * payout(t)
    q_pow = np.stack(
        [model.death_probability(c.age, t) ** c.count for c in pool.cohorts]
    )
    epsilon = integrate_values(discounted * np.prod(q_pow, axis=0), grid)
    conditions = []
    for subset in _proper_subsets(pool.num_cohorts):
        inside = np.ones_like(t)
        outside = np.ones_like(t)
        for j in range(pool.num_cohorts):
            if j in subset:
                inside = inside * q_pow[j]
            else:
                outside = outside * q_pow[j]
        value = integrate_values(discounted * outside * (1.0 - inside), grid)
        bound = wealth_fraction(pool, subset) * (1.0 - epsilon)
        conditions.append(SubsetCondition(tuple(subset), value, bound))
    feasible = all(c.satisfied for c in conditions)
    return FeasibilityReport(feasible, epsilon, tuple(conditions))


def _default_anchor(num_cohorts: int) -> int | str:
    if num_cohorts == 2:
        return 0
    if num_cohorts == 3:
        return 1
    return "max"


def solve_equitable(
    payout: PayoutFunction,
    pool: PoolSpec,
    model,
    econ: EconomicParams,
    grid: QuadratureGrid | None = None,
    *,
    tol: float = 1e-5,
    relaxation: float = 0.5,
    initial_step: float = 0.25,
    start: ParticipationRates | np.ndarray | None = None,
    max_passes: int = 20000,
    anchor: int | str | None = None,
    _valuation: Valuation | None = None,
) -> ParticipationRates:
    """Equitable participation rates for a fixed payout schedule.

    Coordinate relaxation: cycle through the cohorts, raising each rate by
    the current step for as long as that cohort's present value stays below
    the common target 1 - epsilon after the raise. Once a full pass makes no
    raise, shrink the step by ``relaxation`` and repeat; stop when the step
    is below ``tol`` and the inequity is below ``tol``.

    The returned vector is unique up to scale and is normalized to
    ``anchor`` (default: first cohort = 1 for two cohorts, second cohort = 1
    for three, largest rate = 1 otherwise).

    Raises :class:`InfeasiblePoolError` when no equitable rates exist and
    :class:`ConvergenceError` if the tolerance is not met in ``max_passes``.
    """
    grid = grid or payout.grid
    k = pool.num_cohorts
    if anchor is None:
        anchor = _default_anchor(k)
    if k == 1:
        return ParticipationRates(np.ones(1), "max=1")

    feasibility = check_existence(payout, pool, model, econ, grid)
    if not feasibility.feasible:
        raise InfeasiblePoolError(feasibility)

    valuation = _valuation or Valuation(payout, pool, model, econ, grid)
    if start is None:
        pi = annuity_rates(pool, model, econ, grid).rates.copy()
    elif isinstance(start, ParticipationRates):
        pi = start.rates.copy()
    else:
        pi = np.asarray(start, dtype=float).copy()
    pi /= pi.max()

    step = initial_step
    theta = None
    for _ in range(max_passes):
        raised = False
        for i in range(k):
            while True:
                candidate = pi.copy()
                candidate[i] += step
                if valuation.present_value(candidate, i) < valuation.target:
                    pi = candidate
                    raised = True
                else:
                    break
        if raised:
            continue
        if step < tol:
            theta = inequity(valuation.present_values(pi))
            if theta < tol:
                return ParticipationRates(pi, "unscaled").normalized(anchor)
        step *= relaxation
    raise ConvergenceError(
        f"no convergence within {max_passes} passes (inequity {theta})", inequity=theta
    )


def solve_natural_equitable(
    pool: PoolSpec,
    model,
    econ: EconomicParams,
    grid: QuadratureGrid,
    *,
    tol: float = 1e-5,
    damping: float = 1.0,
    max_outer: int = 100,
    anchor: int | str | None = None,
    **solver_kwargs,
) -> tuple[ParticipationRates, PayoutFunction]:
    """Rates and schedule that are simultaneously natural and equitable.

    Fixed point of rates -> equitable rates of the natural schedule those
    rates induce. Updates replace the iterate outright by default; set
    ``damping`` below 1 to mix in the previous iterate if the alternation
    oscillates.
    """
    if anchor is None:
        anchor = _default_anchor(pool.num_cohorts)
    pi = annuity_rates(pool, model, econ, grid).rates.copy()
    pi /= pi.max()
    trace = []
    for iteration in range(max_outer):
        payout = natural_payout(pool, ParticipationRates(pi), model, econ, grid)
        try:
            solved = solve_equitable(
                payout, pool, model, econ, grid,
                tol=tol, start=pi, anchor="max", **solver_kwargs,
            )
        except InfeasiblePoolError as exc:
            exc.args = (f"natural schedule infeasible at outer iteration {iteration}: {exc}",)
            raise
        new_pi = solved.rates / solved.rates.max()
        shift = float(np.max(np.abs(new_pi - pi)))
        trace.append((iteration, shift))
        pi = damping * new_pi + (1.0 - damping) * pi
        if shift < tol:
            rates = ParticipationRates(pi, "unscaled").normalized(anchor)
            return rates, natural_payout(pool, rates, model, econ, grid)
    raise ConvergenceError(
        f"natural-equitable alternation did not settle in {max_outer} rounds"
        f" (last shift {trace[-1][1]:.3g})",
        trace=trace,
    )


def equity_report(payout: PayoutFunction, pool: PoolSpec, rates: ParticipationRates,
                  model, econ: EconomicParams, grid: QuadratureGrid | None = None) -> EquityReport:
    """Value a pool under given rates and collect the equity diagnostics."""
    grid = grid or payout.grid
    valuation = Valuation(payout, pool, model, econ, grid)
    values = valuation.present_values(rates.rates)
    feasibility = check_existence(payout, pool, model, econ, grid)
    return EquityReport(
        pool=pool,
        rates=rates,
        values=values,
        epsilon=valuation.epsilon,
        theta=inequity(values),
        feasible=feasibility.feasible,
        violations=feasibility.violations,
    )


def equity_report_to_csv(report: EquityReport) -> str:
    """Cohort rows plus a summary section.

    Columns: age, investment, count, participation_rate, share_price,
    shares_per_head, present_value; then epsilon, theta, feasible.
    """
    lines = ["age,investment,count,participation_rate,share_price,shares_per_head,present_value"]
    shares = report.rates.shares(report.pool)
    for j, c in enumerate(report.pool.cohorts):
        rate = report.rates.rates[j]
        lines.append(
            f"{c.age:.6g},{c.investment:.6g},{c.count},{rate:.6g},"
            f"{1.0 / rate:.6g},{shares[j]:.6g},{report.values[j]:.6g}"
        )
    lines.append("")
    lines.append("epsilon,theta,feasible")
    lines.append(f"{report.epsilon:.6g},{report.theta:.6g},{'yes' if report.feasible else 'no'}")
    return "\n".join(lines) + "\n"
