"""
Clarke subdifferential of a piecewise-C1 potential in t.

For a scalar piecewise-C1 function the generalized gradient is the interval
spanned by the one-sided derivatives, and the generalized directional
derivative is its support function.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from config import BREAKPOINT_TOL
from numerics.potential.pieces import PiecewisePotential


@dataclass(frozen=True)
class ClarkeInterval:
    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, v: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= v <= self.hi + tol

    def distance(self, v: float) -> float:
        return max(self.lo - v, 0.0, v - self.hi)


def clarke_bounds(
    j: PiecewisePotential,
    t: Any,
    px: Any = None,
    tol: float = BREAKPOINT_TOL,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Vectorized interval endpoints (lo, hi) of the Clarke subdifferential at t.
    Within `tol` of a breakpoint the interval spans the slopes of both
    adjacent pieces; elsewhere it degenerates to the piece slope.
    """
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    px_arr = None if px is None else np.broadcast_to(np.asarray(px, dtype=float), t_arr.shape).copy()
    lo = j.slope(t_arr, px_arr)
    hi = lo.copy()
    if not j.breakpoints:
        return lo, hi

    bp = np.asarray(j.breakpoints)
    dist = np.abs(t_arr[:, None] - bp[None, :])
    nearest = np.argmin(dist, axis=1)
    near = dist[np.arange(t_arr.size), nearest] < tol
    for k in np.unique(nearest[near]):
        mask = near & (nearest == k)
        tk = t_arr[mask]
        pk = None if px_arr is None else px_arr[mask]
        left = j.slope_on_piece(int(k), tk, pk)
        right = j.slope_on_piece(int(k) + 1, tk, pk)
        lo[mask] = np.minimum(left, right)
        hi[mask] = np.maximum(left, right)
    return lo, hi


def clarke_interval(j: PiecewisePotential, x: Any, t: float) -> ClarkeInterval:
    """Clarke interval of j(x, .) at t; x is a point of the domain."""
    lo, hi = clarke_bounds(j, t, j.exponent_at(x))
    return ClarkeInterval(float(lo[0]), float(hi[0]))


def support(lo: np.ndarray, hi: np.ndarray, h: Any) -> np.ndarray:
    """max{xi h : xi in [lo, hi]} elementwise."""
    h_arr = np.asarray(h, dtype=float)
    return np.where(h_arr >= 0.0, hi * h_arr, lo * h_arr)


def j0(j: PiecewisePotential, x: Any, t: float, h: float) -> float:
    """Generalized directional derivative j0(x, t; h)."""
    interval = clarke_interval(j, x, t)
    return interval.hi * h if h >= 0 else interval.lo * h


def j0_values(j: PiecewisePotential, t: Any, h: Any, px: Any = None) -> np.ndarray:
    """Vectorized j0(x, t; h) with px = p(x) at the points."""
    lo, hi = clarke_bounds(j, t, px)
    return support(lo, hi, h)
