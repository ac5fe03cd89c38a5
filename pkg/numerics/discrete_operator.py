"""
Discrete p(x)-Laplacian.

Gradients are taken per cell at the midpoint; A is assembled as
sum_a D_a^T (m |g|^{p-2} g_a) and restricted to interior nodes. The p == 2
stiffness K (interior block) and its `splu` factorisation precondition every
iterative search in the package.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh
from scipy.sparse.linalg import eigsh, splu

from config import (
    DEFAULT_SEED,
    GRADIENT_EPS,
    LAMBDA_STAR_MAX_ITERS,
    LAMBDA_STAR_RESTARTS,
    LAMBDA_STAR_RTOL,
    OPERATOR_CACHE_SIZE,
)
from lib.errors import NonFiniteError, NotConvergedError, VexpError
from numerics.exponent_domain import ExponentField, Grid, GridFunction
from numerics.modular_spaces import luxemburg_from_cells

logger = logging.getLogger(__name__)

ARMIJO_C = 1e-4
MIN_STEP = 1e-14


@dataclass(frozen=True, eq=False)
class CellField:
    """One gradient vector per cell, shape (n_cells, dimension)."""
    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.shape != (self.grid.n_cells, self.grid.dimension):
            raise VexpError("cell field shape does not match the grid", shape=list(self.values.shape))

    @property
    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values**2, axis=1))


@dataclass(frozen=True, eq=False)
class DualVector:
    """Action on nodal basis functions; boundary entries are identically 0."""
    grid: Grid
    values: np.ndarray

    @property
    def interior(self) -> np.ndarray:
        return self.values[self.grid.interior]

    def pair(self, v: GridFunction) -> float:
        """<self, v>."""
        self.grid.check_same(v.grid)
        return float(np.dot(self.values, v.values))

    @classmethod
    def from_interior(cls, grid: Grid, interior_values: np.ndarray) -> "DualVector":
        full = np.zeros(grid.n_nodes)
        full[grid.interior] = interior_values
        return cls(grid, full)


# ===== Cell-level kernels =====

def gradient_components(grid: Grid, values: np.ndarray) -> np.ndarray:
    """(n_cells, dim) gradient of the interpolant of nodal values."""
    return np.stack([D @ values for D in grid.gradient_operators], axis=1)


def _weight(mag: np.ndarray, p_cells: np.ndarray) -> np.ndarray:
    """|g|^{p-2}, with the product weight * g taken as 0 where g = 0."""
    safe = np.where(mag > 0.0, mag, 1.0)
    return np.where(mag > 0.0, safe ** (p_cells - 2.0), 0.0)


def flux_divergence(grid: Grid, values: np.ndarray, p_cells: np.ndarray) -> np.ndarray:
    """Full nodal vector sum_a D_a^T (m |g|^{p-2} g_a), boundary rows included."""
    g = gradient_components(grid, values)
    mag = np.sqrt(np.sum(g * g, axis=1))
    w = grid.cell_measure * _weight(mag, p_cells)
    out = np.zeros(grid.n_nodes)
    for a, D in enumerate(grid.gradient_operators):
        out += D.T @ (w * g[:, a])
    return out


def _check(u: GridFunction, p: ExponentField) -> None:
    u.grid.check_same(p.grid, "exponent field")


# ===== Public operations =====

def gradient(u: GridFunction) -> CellField:
    return CellField(u.grid, gradient_components(u.grid, u.values))


def apply_A(u: GridFunction, p: ExponentField) -> DualVector:
    """<Au, phi_k> = sum_cells m |grad u|^{p-2} grad u . grad phi_k for interior nodes k."""
    _check(u, p)
    full = flux_divergence(u.grid, u.values, p.cell_values)
    if not np.all(np.isfinite(full)):
        raise NonFiniteError("non-finite values while applying A")
    full[u.grid.boundary_mask] = 0.0
    return DualVector(u.grid, full)


def energy_J(u: GridFunction, p: ExponentField) -> float:
    """J(u) = integral of |grad u|^{p(x)} / p(x)."""
    _check(u, p)
    mag = gradient(u).magnitude
    pc = p.cell_values
    return float(u.grid.cell_measure * np.sum(mag**pc / pc))


@lru_cache(maxsize=OPERATOR_CACHE_SIZE)
def _operators_for(key: tuple) -> dict:
    """K, M and the splu factor of K for the grid with this key."""
    grid = Grid(*key)
    idx = grid.interior
    m = grid.cell_measure
    K = sum(D.T @ D for D in grid.gradient_operators) * m
    K = sp.csc_matrix(K[idx][:, idx])
    P = grid.midpoint_operator[:, idx]
    M = sp.csc_matrix((P.T @ P) * m)
    return {"K": K, "M": M, "lu": splu(K)}


def _operators(grid: Grid) -> dict:
    return _operators_for(grid.key)


def stiffness_matrix(grid: Grid) -> sp.csc_matrix:
    """p == 2 stiffness restricted to interior nodes."""
    return _operators(grid)["K"]


def mass_matrix(grid: Grid) -> sp.csc_matrix:
    """Midpoint-rule mass P^T P m restricted to interior nodes."""
    return _operators(grid)["M"]


def precondition(grid: Grid, interior_vector: np.ndarray) -> np.ndarray:
    """Apply K^{-1} through the cached factorisation."""
    return _operators(grid)["lu"].solve(np.asarray(interior_vector, dtype=float))


def first_eigenvector(grid: Grid) -> tuple[float, GridFunction]:
    """
    Smallest eigenpair of K x = lam M x (shift-invert at 0, deterministic start).
    The eigenvector is returned positive with unit max-norm.
    """
    ops = _operators(grid)
    n = grid.interior.size
    if n <= 2:
        vals, vecs = eigh(ops["K"].toarray(), ops["M"].toarray(), subset_by_index=[0, 0])
    else:
        vals, vecs = eigsh(ops["K"], k=1, M=ops["M"], sigma=0.0, which="LM", v0=np.ones(n))
    vec = vecs[:, 0]
    vec = vec / vec[np.argmax(np.abs(vec))]
    return float(vals[0]), GridFunction.from_interior(grid, vec)


def jacobian_A(u: GridFunction, p: ExponentField, eps: float = GRADIENT_EPS) -> sp.csr_matrix:
    """
    Interior Jacobian of A at u. The per-cell tangent of |g|^{p-2} g is
    (|g|^2 + eps^2)^{(p-2)/2} (I + (p-2) g g^T / (|g|^2 + eps^2)).
    """
    _check(u, p)
    grid = u.grid
    g = gradient_components(grid, u.values)
    s2 = np.sum(g * g, axis=1) + eps * eps
    base = s2 ** ((p.cell_values - 2.0) / 2.0) * grid.cell_measure
    corr = (p.cell_values - 2.0) / s2
    ops = grid.gradient_operators
    idx = grid.interior
    J = None
    for a, Da in enumerate(ops):
        for b, Db in enumerate(ops):
            coeff = base * (corr * g[:, a] * g[:, b] + (1.0 if a == b else 0.0))
            term = Da.T @ sp.diags(coeff) @ Db
            J = term if J is None else J + term
    return sp.csr_matrix(J[idx][:, idx])


# ===== Luxemburg gradients =====

def _lux_and_gradient(cells: np.ndarray, p_cells: np.ndarray, m: float, measure: float,
                      backprop) -> tuple[float, np.ndarray]:
    """
    Luxemburg norm of cell data and its gradient through the implicit relation
    sum m |w / lam|^p = 1: d lam = sum m p |z|^{p-2} z dw / sum m p |z|^p, z = w / lam.
    `cells` is (n_cells,) or (n_cells, dim); `backprop` maps cell sensitivities to nodes.
    """
    mag = np.abs(cells) if cells.ndim == 1 else np.sqrt(np.sum(cells**2, axis=1))
    lam = luxemburg_from_cells(mag, p_cells, m, measure)
    if lam == 0.0:
        return 0.0, np.zeros_like(backprop(np.zeros_like(cells)))
    z = cells / lam
    zmag = mag / lam
    w = m * p_cells * _weight(zmag, p_cells)
    sens = w * z if cells.ndim == 1 else w[:, None] * z
    denom = float(np.sum(m * p_cells * zmag**p_cells))
    return lam, backprop(sens) / denom


# ===== lambda_* and Poincare =====

@dataclass
class SearchResult:
    value: float
    witness: GridFunction
    converged: bool
    iterations: int
    per_start: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "converged": self.converged,
            "iterations": self.iterations,
            "per_start": list(self.per_start),
        }


def _starts(grid: Grid, restarts: int, seed: int) -> list[np.ndarray]:
    _, eig = first_eigenvector(grid)
    rng = np.random.default_rng(seed)
    out = [eig.interior_values.copy()]
    for _ in range(restarts):
        out.append(rng.standard_normal(grid.interior.size))
    return out


class _Quotient:
    """Rayleigh-type quotient on interior vectors, normalized to unit modular."""

    def __init__(self, p: ExponentField) -> None:
        self.grid = p.grid
        self.p = p
        self.idx = p.grid.interior
        self.P = p.grid.midpoint_operator[:, self.idx]
        self.Ds = [D[:, self.idx] for D in p.grid.gradient_operators]
        self.m = p.grid.cell_measure
        self.pc = p.cell_values

    def grads(self, x: np.ndarray) -> np.ndarray:
        return np.stack([D @ x for D in self.Ds], axis=1)

    def normalize(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Scale x to unit modular; returns (x, grad of its Luxemburg norm)."""
        lam, dlam = _lux_and_gradient(self.P @ x, self.pc, self.m, self.grid.measure, lambda s: self.P.T @ s)
        x = x / lam
        # dlam is scale invariant
        return x, dlam

    def value(self, x: np.ndarray) -> float:
        g = self.grads(x)
        mag = np.sqrt(np.sum(g * g, axis=1))
        num = np.sum(self.m * mag**self.pc)
        den = np.sum(self.m * np.abs(self.P @ x) ** self.pc)
        return float(num / den)

    def gradient(self, x: np.ndarray, dlam: np.ndarray) -> np.ndarray:
        """Gradient of Q(N(x)) at a unit-modular x."""
        g = self.grads(x)
        mag = np.sqrt(np.sum(g * g, axis=1))
        c = self.P @ x
        num = np.sum(self.m * mag**self.pc)
        den = np.sum(self.m * np.abs(c) ** self.pc)
        wg = self.m * self.pc * _weight(mag, self.pc)
        dnum = sum(D.T @ (wg * g[:, a]) for a, D in enumerate(self.Ds))
        dden = self.P.T @ (self.m * self.pc * _weight(np.abs(c), self.pc) * c)
        dq = (dnum - (num / den) * dden) / den
        return dq - float(np.dot(dq, x)) * dlam


def _descend(q: _Quotient, x0: np.ndarray, max_iters: int, rtol: float) -> tuple[float, np.ndarray, bool, int]:
    x, dlam = q.normalize(x0)
    val = q.value(x)
    for it in range(1, max_iters + 1):
        g = q.gradient(x, dlam)
        d = -precondition(q.grid, g)
        slope = float(np.dot(g, d))
        if slope >= 0.0 or not np.isfinite(slope):
            return val, x, True, it
        alpha = 1.0
        accepted = False
        while alpha > MIN_STEP:
            x_try, dlam_try = q.normalize(x + alpha * d)
            v_try = q.value(x_try)
            if v_try <= val + ARMIJO_C * alpha * slope:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            return val, x, True, it
        change = (val - v_try) / max(abs(val), 1e-300)
        x, dlam, val = x_try, dlam_try, v_try
        if change < rtol:
            return val, x, True, it
    return val, x, False, max_iters


def lambda_star_search(
    p: ExponentField,
    restarts: int = LAMBDA_STAR_RESTARTS,
    seed: int = DEFAULT_SEED,
    max_iters: int = LAMBDA_STAR_MAX_ITERS,
    rtol: float = LAMBDA_STAR_RTOL,
) -> SearchResult:
    """
    Normalized descent on int |grad u|^p / int |u|^p from the first eigenvector
    plus `restarts` seeded random starts; running minimum over starts.
    """
    if restarts < 1:
        raise VexpError("restarts must be at least 1", restarts=restarts)
    q = _Quotient(p)
    best: tuple[float, np.ndarray, bool] | None = None
    per_start = []
    total = 0
    for k, x0 in enumerate(_starts(p.grid, restarts, seed)):
        val, x, converged, its = _descend(q, x0, max_iters, rtol)
        total += its
        per_start.append(val)
        logger.debug("lambda_* start %d: %.12g after %d iterations (converged=%s)", k, val, its, converged)
        if best is None or val < best[0]:
            best = (val, x, converged)
    value, x, converged = best
    result = SearchResult(float(value), GridFunction.from_interior(p.grid, x), converged, total, per_start)
    if not converged:
        raise NotConvergedError("lambda_* search hit the iteration cap", best=result, value=result.value)
    return result


def estimate_lambda_star(
    p: ExponentField,
    grid: Grid | None = None,
    restarts: int = LAMBDA_STAR_RESTARTS,
    seed: int = DEFAULT_SEED,
) -> float:
    """Discrete upper bound on lambda_*."""
    if grid is not None:
        grid.check_same(p.grid, "exponent field")
    return lambda_star_search(p, restarts=restarts, seed=seed).value


def poincare_search(
    p: ExponentField,
    restarts: int = LAMBDA_STAR_RESTARTS,
    seed: int = DEFAULT_SEED,
    max_iters: int = LAMBDA_STAR_MAX_ITERS,
    rtol: float = LAMBDA_STAR_RTOL,
) -> SearchResult:
    """Ascent on |u|_{p(x)} / |grad u|_{p(x)}; both norms are 1-homogeneous."""
    grid = p.grid
    idx = grid.interior
    P = grid.midpoint_operator[:, idx]
    Ds = [D[:, idx] for D in grid.gradient_operators]
    m, pc, meas = grid.cell_measure, p.cell_values, grid.measure

    def ratio_and_grad(x: np.ndarray) -> tuple[float, np.ndarray]:
        a, da = _lux_and_gradient(P @ x, pc, m, meas, lambda s: P.T @ s)
        g = np.stack([D @ x for D in Ds], axis=1)
        b, db = _lux_and_gradient(g, pc, m, meas, lambda s: sum(D.T @ s[:, k] for k, D in enumerate(Ds)))
        h = a / b
        return h, (da - h * db) / b

    best: tuple[float, np.ndarray, bool] | None = None
    per_start = []
    total = 0
    for x0 in _starts(grid, restarts, seed):
        x = x0 / np.max(np.abs(x0))
        val, grad = ratio_and_grad(x)
        converged = False
        its = 0
        for its in range(1, max_iters + 1):
            d = precondition(grid, grad)
            slope = float(np.dot(grad, d))
            if slope <= 0.0:
                converged = True
                break
            alpha = 1.0
            accepted = False
            while alpha > MIN_STEP:
                x_try = x + alpha * d
                v_try, g_try = ratio_and_grad(x_try)
                if v_try >= val + ARMIJO_C * alpha * slope:
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                converged = True
                break
            change = (v_try - val) / max(abs(val), 1e-300)
            x = x_try / np.max(np.abs(x_try))
            val, grad = ratio_and_grad(x)
            if change < rtol:
                converged = True
                break
        total += its
        per_start.append(val)
        if best is None or val > best[0]:
            best = (val, x, converged)
    value, x, converged = best
    if not converged:
        logger.warning("Poincare ascent hit the iteration cap; returning best-so-far %.6g", value)
    return SearchResult(float(value), GridFunction.from_interior(grid, x), converged, total, per_start)


def estimate_poincare(p: ExponentField, grid: Grid | None = None, restarts: int = LAMBDA_STAR_RESTARTS,
                      seed: int = DEFAULT_SEED) -> float:
    """Lower bound on the smallest c with |u|_{p(x)} <= c |grad u|_{p(x)}."""
    if grid is not None:
        grid.check_same(p.grid, "exponent field")
    return poincare_search(p, restarts=restarts, seed=seed).value
