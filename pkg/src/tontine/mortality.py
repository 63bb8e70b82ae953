"""Gompertz mortality: hazard, survival, annuity pricing, lifetime sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import QuadratureGrid, integrate_values

__all__ = [
    "DEFAULT_MODE_AGE",
    "DEFAULT_DISPERSION",
    "DEFAULT_RATE",
    "MAX_AGE",
    "GompertzMortality",
    "EconomicParams",
    "life_grid",
    "annuity_factor",
    "discrete_annuity_factor",
]

DEFAULT_MODE_AGE = 88.72
DEFAULT_DISPERSION = 10.0
DEFAULT_RATE = 0.04

# Default truncation age for "for life" integrals. Survival to 130 is below
# 1e-12 for any retirement age under the default parameters, so truncating
# the infinite-horizon prices here costs nothing at the tolerances used.
MAX_AGE = 130.0


def _as_float(x: np.ndarray):
    return x if x.ndim else float(x)


@dataclass(frozen=True)
class GompertzMortality:
    """Gompertz law: hazard(x) = exp((x - mode_age) / dispersion) / dispersion.

    ``mode_age`` is the modal age at death, ``dispersion`` the spread of the
    death-age distribution; both in years.
    """

    mode_age: float = DEFAULT_MODE_AGE
    dispersion: float = DEFAULT_DISPERSION

    def __post_init__(self) -> None:
        if not (np.isfinite(self.dispersion) and self.dispersion > 0):
            raise ValueError(f"dispersion must be positive, got {self.dispersion}")
        if not np.isfinite(self.mode_age):
            raise ValueError(f"mode_age must be finite, got {self.mode_age}")

    def hazard(self, age):
        """Instantaneous force of mortality at ``age``."""
        x = np.asarray(age, dtype=float)
        return _as_float(np.exp((x - self.mode_age) / self.dispersion) / self.dispersion)

    def survival(self, age, years):
        """Probability that a life aged ``age`` is still alive ``years`` later."""
        t = np.asarray(years, dtype=float)
        if np.any(t < 0):
            raise ValueError("years must be non-negative")
        z = np.exp((age - self.mode_age) / self.dispersion)
        return _as_float(np.exp(-z * np.expm1(t / self.dispersion)))

    def death_probability(self, age, years):
        """Complement of :meth:`survival`."""
        return 1.0 - self.survival(age, years)

    def sample_lifetime(self, age, u):
        """Remaining-lifetime quantile: the t with survival(age, t) == u.

        Feeding independent uniforms on (0, 1) yields exact inverse-CDF
        samples of the remaining lifetime.
        """
        u = np.asarray(u, dtype=float)
        if np.any(u <= 0.0) or np.any(u >= 1.0):
            raise ValueError("u must lie strictly inside (0, 1)")
        z = np.exp(-(age - self.mode_age) / self.dispersion)
        return _as_float(self.dispersion * np.log1p(-np.log(u) * z))


@dataclass(frozen=True)
class EconomicParams:
    """Constant continuously compounded risk-free rate."""

    rate: float = DEFAULT_RATE

    def __post_init__(self) -> None:
        if not (np.isfinite(self.rate) and self.rate >= 0):
            raise ValueError(f"rate must be non-negative, got {self.rate}")

    def discount(self, t):
        return np.exp(-self.rate * np.asarray(t, dtype=float))


def life_grid(age: float, steps: int = 400, max_age: float = MAX_AGE) -> QuadratureGrid:
    """Quadrature grid running from ``age`` out to ``max_age``."""
    if age >= max_age:
        raise ValueError(f"age {age} must be below max_age {max_age}")
    return QuadratureGrid(horizon=max_age - age, steps=steps)


def annuity_factor(model, econ: EconomicParams, age: float, grid: QuadratureGrid | None = None) -> float:
    """Price of $1 per year paid continuously for life from ``age``."""
    if grid is None:
        grid = life_grid(age)
    t = grid.nodes
    return integrate_values(econ.discount(t) * model.survival(age, t), grid)


def discrete_annuity_factor(model, econ: EconomicParams, age: float, dt: float, horizon: float | None = None) -> float:
    """Price of $1 per period of length ``dt``, first payment immediate.

    Sums payments at t_k = k * dt for all t_k strictly below ``horizon``
    (default: until ``MAX_AGE`` is reached).
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if horizon is None:
        horizon = MAX_AGE - age
    tk = np.arange(0, int(np.ceil(horizon / dt))) * dt
    return float(np.sum(econ.discount(tk) * model.survival(age, tk)))
