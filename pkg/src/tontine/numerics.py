"""Composite Simpson quadrature and bracketed scalar root finding.

Every present-value integral in the package runs over a shared uniform
grid, so budget identities that hold pointwise also hold to machine
precision for the quadrature values computed on that grid.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = ["QuadratureGrid", "integrate", "integrate_values", "solve_scalar"]


@dataclass(frozen=True)
class QuadratureGrid:
    """Uniform nodes on [0, horizon] with an even number of Simpson intervals."""

    horizon: float
    steps: int = 400

    def __post_init__(self) -> None:
        if not np.isfinite(self.horizon) or self.horizon <= 0:
            raise ValueError(f"horizon must be positive and finite, got {self.horizon}")
        if self.steps < 2 or self.steps % 2 != 0:
            raise ValueError(f"steps must be a positive even integer, got {self.steps}")

    @property
    def spacing(self) -> float:
        return self.horizon / self.steps

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.steps + 1)

    def weights(self) -> np.ndarray:
        """Composite Simpson node weights, h/3 factor included."""
        w = np.ones(self.steps + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w * (self.spacing / 3.0)


def integrate_values(values: np.ndarray, grid: QuadratureGrid) -> float:
    """Composite Simpson sum of integrand values sampled at ``grid.nodes``."""
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.steps + 1,):
        raise ValueError(
            f"expected {grid.steps + 1} node values, got shape {values.shape}"
        )
    if not np.all(np.isfinite(values)):
        k = int(np.flatnonzero(~np.isfinite(values))[0])
        raise ValueError(
            f"non-finite integrand value {values[k]} at node t={grid.nodes[k]:g}"
        )
    return float(grid.weights() @ values)


def integrate(f: Callable, grid: QuadratureGrid) -> float:
    """Integrate ``f`` over [0, grid.horizon] by composite Simpson.

    ``f`` may accept an array of times or a single time; scalar-only
    callables are evaluated node by node.
    """
    nodes = grid.nodes
    try:
        values = np.asarray(f(nodes), dtype=float)
        if values.shape != nodes.shape:
            raise TypeError
    except (TypeError, ValueError):
        values = np.array([float(f(t)) for t in nodes])
    return integrate_values(values, grid)


def solve_scalar(
    g: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> float:
    """Root of ``g`` on [lo, hi] by bisection.

    Stops once |g| falls below ``tol`` or the bracket is narrower than
    ``tol``. The endpoints must straddle a root (g(lo) * g(hi) <= 0).
    """
    if not hi > lo:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    g_lo = g(lo)
    g_hi = g(hi)
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi
    if g_lo * g_hi > 0:
        raise ValueError(f"bracket [{lo:g}, {hi:g}] does not straddle a root")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        g_mid = g(mid)
        if abs(g_mid) < tol or (hi - lo) < tol:
            return mid
        if g_lo * g_mid <= 0:
            hi = mid
        else:
            lo, g_lo = mid, g_mid
    return 0.5 * (lo + hi)
