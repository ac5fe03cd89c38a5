"""
Modulars, Luxemburg norms and Sobolev norms on a Grid.

All cell-level integrals use the midpoint rule with u and p interpolated to
cell midpoints; |grad u| is the gradient of the multilinear interpolant at
the midpoint. `lumped_integral` is the nodal rule used for zeroth-order
terms of the energy.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import bisect

from config import LUXEMBURG_MAX_EXPANSIONS, LUXEMBURG_RTOL
from lib.errors import NonFiniteError, VexpError
from numerics.exponent_domain import ExponentField, Grid, GridFunction

logger = logging.getLogger(__name__)

__all__ = [
    "GridFunction",
    "NormBundle",
    "modular",
    "luxemburg_norm",
    "gradient_full_modular",
    "sobolev_norm",
    "phi_luxemburg_norm",
    "norm_equivalence",
    "holder_pairing",
    "lumped_integral",
    "norm_bundle",
    "lemma_checks",
    "sequence_check",
]


@dataclass(frozen=True)
class NormBundle:
    """modular, Luxemburg norm, full modular Phi and Sobolev norm of one function."""
    modular: float
    luxemburg: float
    phi: float
    sobolev: float

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


# ===== Cell-level primitives =====

def cell_values(u: GridFunction) -> np.ndarray:
    return u.grid.midpoint_operator @ u.values


def gradient_magnitude(u: GridFunction) -> np.ndarray:
    """|grad u| at cell midpoints."""
    comps = [D @ u.values for D in u.grid.gradient_operators]
    if len(comps) == 1:
        return np.abs(comps[0])
    return np.sqrt(sum(c * c for c in comps))


def cell_modular(w_abs: np.ndarray, p_cells: np.ndarray, cell_measure: float) -> float:
    """sum_c m |w_c|^{p_c}."""
    with np.errstate(over="ignore"):
        return float(cell_measure * np.sum(np.power(w_abs, p_cells)))


def luxemburg_from_cells(w_abs: np.ndarray, p_cells: np.ndarray, cell_measure: float, measure: float) -> float:
    """
    Solve sum_c m |w_c / lam|^{p_c} = 1 for lam.

    The map lam -> modular(w / lam) is strictly decreasing, so a bracket
    followed by bisection finds the unique root.
    """
    if not np.all(np.isfinite(w_abs)):
        raise NonFiniteError("non-finite values in Luxemburg norm argument")
    w_max = float(np.max(w_abs)) if w_abs.size else 0.0
    if w_max == 0.0:
        return 0.0

    def excess(lam: float) -> float:
        with np.errstate(over="ignore"):
            return cell_measure * float(np.sum(np.power(w_abs / lam, p_cells))) - 1.0

    p_minus = float(np.min(p_cells))
    hi = max(1.0, 2.0 * w_max * measure ** (1.0 / p_minus))
    lo = hi
    for _ in range(LUXEMBURG_MAX_EXPANSIONS):
        if excess(hi) <= 0.0:
            break
        hi *= 2.0
    else:
        raise VexpError("Luxemburg bracket expansion failed (upper end)", w_max=w_max)
    for _ in range(LUXEMBURG_MAX_EXPANSIONS):
        if excess(lo) > 0.0:
            break
        lo /= 2.0
    else:
        raise VexpError("Luxemburg bracket expansion failed (lower end)", w_max=w_max)

    f_hi = excess(hi)
    if f_hi == 0.0:
        return hi
    return float(bisect(excess, lo, hi, xtol=1e-300, rtol=LUXEMBURG_RTOL, maxiter=400))


def _check(u: GridFunction, p: ExponentField) -> None:
    u.grid.check_same(p.grid, "exponent field")


# ===== Public operations =====

def modular(u: GridFunction, p: ExponentField) -> float:
    """phi(u) = integral of |u|^{p(x)}."""
    _check(u, p)
    return cell_modular(np.abs(cell_values(u)), p.cell_values, u.grid.cell_measure)


def luxemburg_norm(u: GridFunction, p: ExponentField) -> float:
    """inf{lam > 0 : phi(u / lam) <= 1}; 0 for the zero function."""
    _check(u, p)
    g = u.grid
    return luxemburg_from_cells(np.abs(cell_values(u)), p.cell_values, g.cell_measure, g.measure)


def gradient_luxemburg_norm(u: GridFunction, p: ExponentField) -> float:
    _check(u, p)
    g = u.grid
    return luxemburg_from_cells(gradient_magnitude(u), p.cell_values, g.cell_measure, g.measure)


def gradient_full_modular(u: GridFunction, p: ExponentField) -> float:
    """Phi(u) = integral of |grad u|^{p(x)} + |u|^{p(x)}."""
    _check(u, p)
    m = u.grid.cell_measure
    return cell_modular(gradient_magnitude(u), p.cell_values, m) + cell_modular(
        np.abs(cell_values(u)), p.cell_values, m
    )


def sobolev_norm(u: GridFunction, p: ExponentField) -> float:
    """Additive norm |u|_{p(x)} + |grad u|_{p(x)}."""
    return luxemburg_norm(u, p) + gradient_luxemburg_norm(u, p)


def phi_luxemburg_norm(u: GridFunction, p: ExponentField) -> float:
    """inf{lam > 0 : Phi(u / lam) <= 1}."""
    _check(u, p)
    g = u.grid
    w = np.concatenate([np.abs(cell_values(u)), gradient_magnitude(u)])
    pc = np.concatenate([p.cell_values, p.cell_values])
    return luxemburg_from_cells(w, pc, g.cell_measure, 2.0 * g.measure)


def norm_equivalence(u: GridFunction, p: ExponentField) -> dict:
    """
    Compare the additive Sobolev norm with the Phi-Luxemburg norm.
    max(a, b) <= phi <= a + b gives ratio phi / additive in [1/2, 1].
    """
    additive = sobolev_norm(u, p)
    phi = phi_luxemburg_norm(u, p)
    if additive == 0.0:
        return {"additive": 0.0, "phi": phi, "ratio": None, "within_bounds": phi == 0.0}
    ratio = phi / additive
    return {
        "additive": additive,
        "phi": phi,
        "ratio": ratio,
        "within_bounds": 0.5 - 1e-12 <= ratio <= 2.0 + 1e-12,
    }


def holder_pairing(u: GridFunction, v: GridFunction, p: ExponentField) -> tuple[float, float]:
    """
    Returns (lhs, rhs) with lhs = integral |u v| and
    rhs = (1/p- + 1/p'-) |u|_{p(x)} |v|_{p'(x)}.
    """
    _check(u, p)
    u.grid.check_same(v.grid, "second function")
    g = u.grid
    lhs = float(g.cell_measure * np.sum(np.abs(cell_values(u) * cell_values(v))))
    p_cells = p.cell_values
    q_cells = p_cells / (p_cells - 1.0)
    q_minus = p.p_plus / (p.p_plus - 1.0)
    norm_u = luxemburg_from_cells(np.abs(cell_values(u)), p_cells, g.cell_measure, g.measure)
    norm_v = luxemburg_from_cells(np.abs(cell_values(v)), q_cells, g.cell_measure, g.measure)
    rhs = (1.0 / p.p_minus + 1.0 / q_minus) * norm_u * norm_v
    return lhs, rhs


def lumped_integral(grid: Grid, nodal_values: np.ndarray) -> float:
    """Nodal (mass-lumped) quadrature of a nodal field."""
    return float(np.sum(grid.nodal_weights * np.asarray(nodal_values, dtype=float)))


def norm_bundle(u: GridFunction, p: ExponentField) -> NormBundle:
    return NormBundle(
        modular=modular(u, p),
        luxemburg=luxemburg_norm(u, p),
        phi=gradient_full_modular(u, p),
        sobolev=sobolev_norm(u, p),
    )


def _sandwich(norm: float, mod: float, p_minus: float, p_plus: float, tol: float) -> dict:
    """Norm-modular sandwich on either side of the unit sphere."""
    # the tolerance band around the unit sphere is excluded
    if abs(norm - 1.0) <= tol:
        return {"case": "unit", "holds": True}
    if norm > 1.0:
        lo, hi = norm**p_minus, norm**p_plus
        case = "above_one"
    else:
        lo, hi = norm**p_plus, norm**p_minus
        case = "below_one"
    holds = lo <= mod * (1.0 + tol) and mod <= hi * (1.0 + tol)
    return {"case": case, "holds": bool(holds), "lower": lo, "upper": hi, "modular": mod}


def _trichotomy(norm: float, mod: float, tol: float) -> bool:
    if abs(norm - 1.0) <= tol or abs(mod - 1.0) <= tol:
        return True
    return (norm < 1.0) == (mod < 1.0)


def lemma_checks(u: GridFunction, p: ExponentField, tol: float = 1e-8) -> dict:
    """
    Norm-modular relations for one function:
    - unit modular at the norm (phi(u / |u|) = 1)
    - |u| < 1, = 1, > 1 together with phi(u)
    - |u|^{p+} <= phi(u) <= |u|^{p-} below one, reversed above one
    The same three checks are made for Phi with the Phi-Luxemburg norm.
    """
    _check(u, p)
    if u.is_zero:
        return {"trivial": True, "all_hold": True}

    out: dict = {"trivial": False}
    for label, norm_fn, mod_fn in (
        ("lebesgue", luxemburg_norm, modular),
        ("sobolev", phi_luxemburg_norm, gradient_full_modular),
    ):
        norm = norm_fn(u, p)
        mod = mod_fn(u, p)
        unit = mod_fn(u.scaled(1.0 / norm), p)
        out[label] = {
            "norm": norm,
            "modular": mod,
            "unit_modular": unit,
            "unit_holds": abs(unit - 1.0) <= tol,
            "trichotomy_holds": _trichotomy(norm, mod, tol),
            "sandwich": _sandwich(norm, mod, p.p_minus, p.p_plus, tol),
        }
    out["all_hold"] = all(
        out[k]["unit_holds"] and out[k]["trichotomy_holds"] and out[k]["sandwich"]["holds"]
        for k in ("lebesgue", "sobolev")
    )
    return out


def sequence_check(norms: list[float], modulars: list[float], zero_tol: float = 1e-6) -> dict:
    """
    Shadow of the sequence statements: norm -> 0 iff modular -> 0 and
    norm -> infinity iff modular -> infinity, judged on the last term.
    """
    if len(norms) != len(modulars) or len(norms) < 2:
        raise VexpError("sequence_check needs two equal-length sequences of at least 2 terms")
    big = 1.0 / zero_tol
    n_last, m_last = float(norms[-1]), float(modulars[-1])
    norm_zero, mod_zero = n_last <= zero_tol, m_last <= zero_tol
    norm_inf, mod_inf = n_last >= big or math.isinf(n_last), m_last >= big or math.isinf(m_last)
    return {
        "norm_to_zero": norm_zero,
        "modular_to_zero": mod_zero,
        "norm_to_infinity": norm_inf,
        "modular_to_infinity": mod_inf,
        "consistent": norm_zero == mod_zero and norm_inf == mod_inf,
    }
