"""Seeded Monte Carlo simulation of tontine, GSA, and log-optimal PAF payouts.

Deterministic stream contract: a path's randomness comes from one
``numpy.random.default_rng(seed)`` (PCG64). Each cohort, in pool order,
draws ``count`` integers uniform on [1, 2^53) which are scaled by 2^-53
into open-interval uniforms and inverted through the survival function.
The same seed therefore always reproduces the same path.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mortality import MAX_AGE, EconomicParams, annuity_factor, life_grid
from .numerics import QuadratureGrid
from .payout import PayoutFunction
from .pool import ParticipationRates, PoolSpec

__all__ = [
    "TontinePath",
    "GsaPath",
    "PafPath",
    "draw_lifetimes",
    "survivor_counts",
    "simulate_tontine",
    "simulate_gsa",
    "simulate_log_optimal_paf",
    "log_optimal_paf_wealth",
    "path_to_csv",
]


def draw_lifetimes(pool: PoolSpec, model, seed: int) -> list[np.ndarray]:
    """One remaining lifetime per head, cohort by cohort, from a seeded PCG64."""
    rng = np.random.default_rng(seed)
    lifetimes = []
    for c in pool.cohorts:
        u = rng.integers(1, 2**53, size=c.count) * 2.0**-53
        lifetimes.append(model.sample_lifetime(c.age, u))
    return lifetimes


def survivor_counts(lifetimes: list[np.ndarray], times: np.ndarray) -> np.ndarray:
    """Number alive per cohort at each time; shape (len(times), K)."""
    times = np.asarray(times, dtype=float)
    return np.stack(
        [(life[None, :] > times[:, None]).sum(axis=1) for life in lifetimes], axis=1
    )


@dataclass
class TontinePath:
    """One simulated tontine history on a fixed time grid."""

    seed: int
    times: np.ndarray
    survivors: np.ndarray      # (T, K) counts
    total_rate: np.ndarray     # pool disbursement rate; 0 once extinct
    per_survivor: np.ndarray   # (T, K) payout rate per live member

    @property
    def extinction_time(self) -> float:
        alive = self.survivors.sum(axis=1) > 0
        return float(self.times[alive].max()) if alive.any() else 0.0


@dataclass
class GsaPath:
    """One simulated group self-annuitization history in discrete time."""

    seed: int
    dt: float
    times: np.ndarray
    survivors: np.ndarray           # (T, K)
    individual_payments: np.ndarray  # (T, K) per live member, per period
    total_payments: np.ndarray       # (T,) per period
    wealth: np.ndarray               # (T,) fund value before each payment
    residual: float                  # fund value left when the pool dies out


@dataclass
class PafPath:
    """One simulated log-optimal pooled-annuity-fund history (single cohort)."""

    seed: int
    times: np.ndarray
    survivors: np.ndarray     # (T,)
    total_rate: np.ndarray    # deterministic while anyone is alive
    per_survivor: np.ndarray
    wealth: np.ndarray


def simulate_tontine(pool: PoolSpec, payout: PayoutFunction, rates: ParticipationRates,
                     model, seed: int, times: np.ndarray | None = None) -> TontinePath:
    """Simulate one payout history of a tontine.

    Each live member of cohort i collects the pool disbursement scaled by
    own shares over live shares; the cohort totals always add back to the
    full disbursement while anyone survives.
    """
    if times is None:
        times = payout.grid.nodes
    times = np.asarray(times, dtype=float)
    lifetimes = draw_lifetimes(pool, model, seed)
    counts = survivor_counts(lifetimes, times)
    shares = rates.rates * pool.investments
    live_shares = counts @ shares
    disburse = pool.total_wealth * payout(times)
    any_alive = live_shares > 0
    total = np.where(any_alive, disburse, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        per = np.where(
            any_alive[:, None], disburse[:, None] * shares[None, :] / live_shares[:, None], 0.0
        )
    return TontinePath(seed, times, counts, total, per)


def _periodic_annuity_table(age: float, econ: EconomicParams, model, dt: float,
                            periods: int) -> np.ndarray:
    """Annuity prices at ages age + k*dt for $1 per period, by backward recursion.

    The recursion value(k) = 1 + e^(-r dt) p_dt value(k+1) holds exactly by
    construction, which keeps the self-financing identity of a GSA exact.
    """
    step_discount = float(np.exp(-econ.rate * dt))
    table = np.ones(periods + 1)
    for k in range(periods - 1, -1, -1):
        p_step = model.survival(age + k * dt, dt)
        table[k] = 1.0 + step_discount * p_step * table[k + 1]
    return table


def simulate_gsa(pool: PoolSpec, model, econ: EconomicParams, seed: int,
                 dt: float = 1.0 / 12.0, max_age: float = MAX_AGE) -> GsaPath:
    """Simulate a group self-annuitization scheme with buy-in at time 0.

    Everyone starts on the payment a fair periodic annuity would give for
    their stake; at each period all payments are scaled by a common factor
    so the fund exactly covers expected future payments, and the fund grows
    at the risk-free rate between payments.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    periods = int(np.ceil((max_age - pool.youngest_age) / dt)) + 1
    tables = [
        _periodic_annuity_table(c.age, econ, model, dt, periods) for c in pool.cohorts
    ]
    base_payment = np.array(
        [c.investment / tables[j][0] for j, c in enumerate(pool.cohorts)]
    )
    lifetimes = draw_lifetimes(pool, model, seed)

    times, counts, individual, totals, wealth_series = [], [], [], [], []
    wealth = pool.total_wealth
    residual = 0.0
    for k in range(periods):
        t = k * dt
        alive = np.array([(life > t).sum() for life in lifetimes])
        if alive.sum() == 0:
            residual = wealth
            break
        liability = sum(
            base_payment[j] * alive[j] * tables[j][k] for j in range(pool.num_cohorts)
        )
        factor = wealth / liability
        payment = factor * base_payment
        total = float(payment @ alive)
        times.append(t)
        counts.append(alive)
        individual.append(payment)
        totals.append(total)
        wealth_series.append(wealth)
        wealth = (wealth - total) * float(np.exp(econ.rate * dt))
    return GsaPath(
        seed=seed,
        dt=dt,
        times=np.array(times),
        survivors=np.array(counts, dtype=int),
        individual_payments=np.array(individual),
        total_payments=np.array(totals),
        wealth=np.array(wealth_series),
        residual=residual,
    )


def log_optimal_paf_wealth(pool: PoolSpec, model, econ: EconomicParams, t,
                           steps: int = 400) -> float | np.ndarray:
    """Assets under management of the log-optimal PAF at time t (single cohort).

    The optimal disbursement drains wealth at rate w / a_(x+t) against
    risk-free growth, making the wealth path deterministic.
    """
    if pool.num_cohorts != 1:
        raise ValueError("the log-optimal fund is defined for a single cohort")
    c = pool.cohorts[0]
    base = annuity_factor(model, econ, c.age, life_grid(c.age, steps))
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    # keep a few integration years even past the truncation age; survival is
    # already ~0 there so the factor barely matters, but it must stay defined
    factors = np.array(
        [
            annuity_factor(
                model, econ, c.age + s,
                QuadratureGrid(max(MAX_AGE - (c.age + s), 5.0), steps),
            )
            for s in t_arr
        ]
    )
    out = c.count * c.investment * factors * model.survival(c.age, t_arr) / base
    return out if np.ndim(t) else float(out[0])


def simulate_log_optimal_paf(pool: PoolSpec, model, econ: EconomicParams, seed: int,
                             grid: QuadratureGrid | None = None) -> PafPath:
    """Simulate the pooled annuity fund that maximizes log utility.

    Its total disbursement rate is deterministic and coincides with the
    cohort's natural tontine; only the split among survivors is random.
    """
    if pool.num_cohorts != 1:
        raise ValueError("the log-optimal fund is defined for a single cohort")
    c = pool.cohorts[0]
    if grid is None:
        grid = life_grid(c.age)
    times = grid.nodes
    lifetimes = draw_lifetimes(pool, model, seed)
    alive = survivor_counts(lifetimes, times)[:, 0]
    base = annuity_factor(model, econ, c.age, grid)
    planned = c.count * c.investment * model.survival(c.age, times) / base
    total = np.where(alive > 0, planned, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        per = np.where(alive > 0, total / np.maximum(alive, 1), 0.0)
    wealth = np.where(alive > 0, log_optimal_paf_wealth(pool, model, econ, times, grid.steps), 0.0)
    return PafPath(seed, times, alive, total, per, wealth)


def path_to_csv(path: TontinePath | PafPath) -> str:
    """Time series as CSV: t, total payout, then per-cohort survivors and payouts."""
    if isinstance(path, PafPath):
        lines = ["t,total_payout,survivors,per_survivor,wealth"]
        for k, t in enumerate(path.times):
            lines.append(
                f"{t:.6g},{path.total_rate[k]:.6g},{path.survivors[k]},"
                f"{path.per_survivor[k]:.6g},{path.wealth[k]:.6g}"
            )
        return "\n".join(lines) + "\n"
    k_cohorts = path.survivors.shape[1]
    header = ["t", "total_payout"]
    for j in range(k_cohorts):
        header += [f"survivors_{j + 1}", f"per_survivor_{j + 1}"]
    lines = [",".join(header)]
    for k, t in enumerate(path.times):
        row = [f"{t:.6g}", f"{path.total_rate[k]:.6g}"]
        for j in range(k_cohorts):
            row += [str(path.survivors[k, j]), f"{path.per_survivor[k, j]:.6g}"]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
