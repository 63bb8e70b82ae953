"""Cohort pools and exact joint-binomial survivor-count expectations."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.stats import binom

from .mortality import MAX_AGE
from .numerics import QuadratureGrid

__all__ = [
    "Cohort",
    "PoolSpec",
    "ParticipationRates",
    "pool_grid",
    "parse_pool_csv",
    "read_pool_csv",
    "pool_to_csv",
    "JointBinomialEngine",
    "conditional_reciprocal_expectation",
    "all_dead_probability",
    "wealth_fraction",
]

POOL_CSV_HEADER = ("age", "investment", "count")

# einsum axis labels for the cohort dimensions; 't' is reserved for time
_AXES = "abcdefghijklmnopqrs"


@dataclass(frozen=True)
class Cohort:
    """A homogeneous group of subscribers: common age, per-head stake, head count."""

    age: float
    investment: float
    count: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.age) or self.age < 0:
            raise ValueError(f"age must be a non-negative number, got {self.age}")
        if not (np.isfinite(self.investment) and self.investment > 0):
            raise ValueError(f"per-head investment must be positive, got {self.investment}")
        if int(self.count) != self.count or self.count < 1:
            raise ValueError(f"count must be a positive integer, got {self.count}")
        object.__setattr__(self, "count", int(self.count))

    @property
    def wealth(self) -> float:
        return self.investment * self.count


@dataclass(frozen=True)
class PoolSpec:
    """An ordered collection of cohorts forming one closed pool."""

    cohorts: tuple[Cohort, ...]

    def __post_init__(self) -> None:
        cohorts = tuple(self.cohorts)
        if not cohorts:
            raise ValueError("a pool needs at least one cohort")
        object.__setattr__(self, "cohorts", cohorts)

    @classmethod
    def homogeneous(cls, age: float, investment: float, count: int) -> "PoolSpec":
        return cls((Cohort(age, investment, count),))

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[float, float, int]]) -> "PoolSpec":
        """Build from (age, investment, count) triples."""
        return cls(tuple(Cohort(*row) for row in rows))

    @property
    def num_cohorts(self) -> int:
        return len(self.cohorts)

    @cached_property
    def ages(self) -> np.ndarray:
        return np.array([c.age for c in self.cohorts])

    @cached_property
    def investments(self) -> np.ndarray:
        return np.array([c.investment for c in self.cohorts])

    @cached_property
    def counts(self) -> np.ndarray:
        return np.array([c.count for c in self.cohorts], dtype=int)

    @property
    def total_heads(self) -> int:
        return int(self.counts.sum())

    @property
    def total_wealth(self) -> float:
        return float((self.counts * self.investments).sum())

    @property
    def youngest_age(self) -> float:
        return float(self.ages.min())


def pool_grid(pool: PoolSpec, steps: int = 400, max_age: float = MAX_AGE) -> QuadratureGrid:
    """Shared quadrature grid for a pool: youngest cohort carried to ``max_age``."""
    if pool.youngest_age >= max_age:
        raise ValueError(f"youngest age {pool.youngest_age} must be below {max_age}")
    return QuadratureGrid(horizon=max_age - pool.youngest_age, steps=steps)


@dataclass
class ParticipationRates:
    """Shares granted per dollar invested, by cohort; 1/rate is the share price.

    Present values are unchanged by a common rescaling of all rates, so a
    ``normalization`` tag records which convention the vector is in.
    """

    rates: np.ndarray
    normalization: str = "unscaled"

    def __post_init__(self) -> None:
        self.rates = np.atleast_1d(np.asarray(self.rates, dtype=float)).copy()
        if self.rates.ndim != 1 or len(self.rates) == 0:
            raise ValueError("rates must be a non-empty vector")
        if not np.all(np.isfinite(self.rates)) or np.any(self.rates <= 0):
            raise ValueError("all participation rates must be positive and finite")

    def __len__(self) -> int:
        return len(self.rates)

    def normalized(self, anchor: int | str = "max") -> "ParticipationRates":
        """Rescale so rate[anchor] == 1 (or the largest rate == 1 for "max")."""
        if anchor == "max":
            scale = self.rates.max()
            tag = "max=1"
        else:
            scale = self.rates[int(anchor)]
            tag = f"cohort{int(anchor) + 1}=1"
        return ParticipationRates(self.rates / scale, tag)

    def ratio(self, i: int, j: int) -> float:
        return float(self.rates[i] / self.rates[j])

    @property
    def share_prices(self) -> np.ndarray:
        return 1.0 / self.rates

    def shares(self, pool: PoolSpec) -> np.ndarray:
        """Shares bought by one member of each cohort."""
        return self.rates * pool.investments


# ---------------------------------------------------------------------------
# pool CSV format: header "age,investment,count", one row per cohort
# ---------------------------------------------------------------------------

def parse_pool_csv(text: str) -> PoolSpec:
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    if not rows:
        raise ValueError("empty pool file")
    header = tuple(cell.strip().lower() for cell in rows[0])
    if header != POOL_CSV_HEADER:
        raise ValueError(f"expected header {','.join(POOL_CSV_HEADER)!r}, got {','.join(rows[0])!r}")
    cohorts = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 3:
            raise ValueError(f"line {lineno}: expected 3 fields, got {len(row)}")
        try:
            cohorts.append(Cohort(float(row[0]), float(row[1]), int(row[2])))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
    return PoolSpec(tuple(cohorts))


def read_pool_csv(path) -> PoolSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_pool_csv(fh.read())


def pool_to_csv(pool: PoolSpec) -> str:
    """Echo of a parsed pool; float fields use repr so values round-trip exactly."""
    lines = [",".join(POOL_CSV_HEADER)]
    for c in pool.cohorts:
        lines.append(f"{c.age!r},{c.investment!r},{c.count}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# exact expectations over joint survivor counts
# ---------------------------------------------------------------------------

def _weighted_count_tensor(counts: Sequence[int], coeffs: np.ndarray, alive: int) -> np.ndarray:
    """sum_j coeffs[j] * N_j over the joint support, with N_alive >= 1.

    Axis j runs over N_j = 0..n_j, except the ``alive`` axis which runs over
    N = 1..n (the conditioned member is counted among the survivors).
    """
    shape = [int(n) + 1 for n in counts]
    shape[alive] = int(counts[alive])
    total = np.zeros(shape)
    for j, size in enumerate(shape):
        values = np.arange(size, dtype=float)
        if j == alive:
            values += 1.0
        index = [None] * len(shape)
        index[j] = slice(None)
        total = total + coeffs[j] * values[tuple(index)]
    return total


class JointBinomialEngine:
    """Exact expectations over a pool's joint survivor counts at grid nodes.

    At any fixed time the cohort survivor counts are independent binomials;
    conditioning on one live member of cohort i shifts that cohort's count
    to 1 + Binomial(n_i - 1, p_i). Expectations are computed by enumerating
    the full joint support (prod_j (n_j + 1) terms per node), so results
    carry no sampling error. Instances are immutable after construction and
    safe to share across threads.
    """

    def __init__(self, pool: PoolSpec, model, grid: QuadratureGrid):
        if pool.num_cohorts > len(_AXES):
            raise ValueError(f"enumeration supports at most {len(_AXES)} cohorts")
        self.pool = pool
        self.model = model
        self.grid = grid
        nodes = grid.nodes
        # survival[i, k] = P(member of cohort i alive at node k)
        self.survival = np.stack([model.survival(c.age, nodes) for c in pool.cohorts])
        self._count_pmf = []  # P(N_j = k) at every node, shape (nodes, n_j + 1)
        self._alive_pmf = []  # P(N_j - 1 = k | member alive), shape (nodes, n_j)
        for j, c in enumerate(pool.cohorts):
            p_col = self.survival[j][:, None]
            self._count_pmf.append(binom.pmf(np.arange(c.count + 1)[None, :], c.count, p_col))
            self._alive_pmf.append(binom.pmf(np.arange(c.count)[None, :], c.count - 1, p_col))

    def conditional_expectation(self, coeffs: np.ndarray, i: int, func: Callable) -> np.ndarray:
        """E[func(sum_j coeffs_j N_j)] at every node, given a live member of cohort i."""
        counts = self.pool.counts
        values = func(_weighted_count_tensor(counts, np.asarray(coeffs, dtype=float), i))
        operands = []
        scripts = []
        for j in range(self.pool.num_cohorts):
            operands.append(self._alive_pmf[j] if j == i else self._count_pmf[j])
            scripts.append("t" + _AXES[j])
        operands.append(values)
        scripts.append(_AXES[: self.pool.num_cohorts])
        return np.einsum(",".join(scripts) + "->t", *operands, optimize=True)

    def all_dead_profile(self) -> np.ndarray:
        """P(no survivors at all) at every node."""
        q = 1.0 - self.survival
        return np.prod(q ** self.pool.counts[:, None], axis=0)


def _expectation_at(pool: PoolSpec, model, coeffs: np.ndarray, i: int, t: float, func: Callable) -> float:
    """Single-time version of the engine's conditional expectation."""
    counts = pool.counts
    values = func(_weighted_count_tensor(counts, coeffs, i))
    for j, c in enumerate(pool.cohorts):
        p = model.survival(c.age, t)
        if j == i:
            pmf = binom.pmf(np.arange(c.count), c.count - 1, p)
        else:
            pmf = binom.pmf(np.arange(c.count + 1), c.count, p)
        values = np.tensordot(pmf, values, axes=(0, 0))
    return float(values)


def conditional_reciprocal_expectation(pool: PoolSpec, model, rates: ParticipationRates, i: int, t: float) -> float:
    """E[rate_i / sum_j rate_j w_j N_j(t)], given one live member of cohort i.

    The conditioned member is included in the denominator, so the result is
    finite and positive, and is unchanged by a common rescaling of the rates.
    """
    coeffs = rates.rates * pool.investments
    return rates.rates[i] * _expectation_at(pool, model, coeffs, i, t, np.reciprocal)


def all_dead_probability(pool: PoolSpec, model, t: float) -> float:
    """Probability the entire pool is extinct by time t."""
    q = np.array([model.death_probability(c.age, t) for c in pool.cohorts])
    return float(np.prod(q ** pool.counts))


def wealth_fraction(pool: PoolSpec, subset: Sequence[int]) -> float:
    """Fraction of the initial pool wealth contributed by the given cohorts."""
    idx = sorted(set(int(k) for k in subset))
    if not idx:
        raise ValueError("subset must be non-empty")
    if idx[0] < 0 or idx[-1] >= pool.num_cohorts:
        raise ValueError(f"cohort indices out of range: {idx}")
    part = sum(pool.cohorts[k].wealth for k in idx)
    return part / pool.total_wealth
