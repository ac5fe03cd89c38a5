"""
The locally Lipschitz energy

    R(u) = int |grad u|^p / p - int lam |u|^p / p - int j(x, u)

with the gradient term on cell midpoints and the zeroth-order terms on
lumped nodal quadrature, so that subgradient selections live on nodes.
The residual of the inclusion at an interior node k is

    u*_k = (Au)_k - w_k (lam |u_k|^{p-2} u_k + v*_k),   v*_k in dj(x_k, u_k).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from config import (
    BREAKPOINT_TOL,
    GRADIENT_EPS,
    PS_CAUCHY_TAIL,
    PS_CAUCHY_TOL,
    PS_GROWTH_FACTOR,
)
from lib.errors import ConfigError, NonFiniteError, VexpError
from numerics.discrete_operator import apply_A, energy_J, jacobian_A, stiffness_matrix
from numerics.exponent_domain import ExponentField, Grid, GridFunction, hat_star
from numerics.modular_spaces import sobolev_norm
from numerics.potential.clarke import clarke_bounds
from numerics.potential.pieces import PiecewisePotential

logger = logging.getLogger(__name__)


class SelectionRule(str, Enum):
    LO = "lo"
    HI = "hi"
    MIDPOINT = "midpoint"
    NEAREST = "nearest-to-residual"


@dataclass(frozen=True, eq=False)
class EnergyModel:
    grid: Grid
    p: ExponentField
    lam: float
    j: PiecewisePotential

    def __post_init__(self) -> None:
        self.grid.check_same(self.p.grid, "exponent field")
        if self.j.exponent is not None:
            self.grid.check_same(self.j.exponent.grid, "potential exponent")
        if not math.isfinite(self.lam):
            raise NonFiniteError("lambda must be finite", lam=self.lam)

    @property
    def weights(self) -> np.ndarray:
        """Lumped weights on interior nodes."""
        return self.grid.nodal_weights[self.grid.interior]

    @property
    def p_interior(self) -> np.ndarray:
        return self.p.values[self.grid.interior]

    @property
    def px_interior(self) -> np.ndarray | None:
        px = self.j.nodal_exponent()
        return None if px is None else px[self.grid.interior]

    @property
    def diag_K(self) -> np.ndarray:
        return stiffness_matrix(self.grid).diagonal()


@dataclass
class SubgradientSelection:
    """Per interior node v* with lo <= v* <= hi."""
    values: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    rule: SelectionRule

    def is_admissible(self, tol: float = 0.0) -> bool:
        return bool(np.all(self.lo - tol <= self.values) and np.all(self.values <= self.hi + tol))


@dataclass
class ResidualReport:
    dual: np.ndarray
    m_estimate: float
    gap: np.ndarray
    needed: np.ndarray
    selection: SubgradientSelection

    @property
    def max_gap(self) -> float:
        return float(np.max(self.gap)) if self.gap.size else 0.0

    def to_dict(self) -> dict:
        return {
            "m_estimate": self.m_estimate,
            "max_gap": self.max_gap,
            "rule": self.selection.rule.value,
            "residual_norm_inf": float(np.max(np.abs(self.dual))) if self.dual.size else 0.0,
        }


def _check(model: EnergyModel, u: GridFunction) -> None:
    model.grid.check_same(u.grid)
    if not u.zero_trace:
        raise VexpError("energy needs a zero-trace function")


def reaction(p_values: np.ndarray, lam: float, values: np.ndarray) -> np.ndarray:
    """lam |u|^{p-2} u with the value 0 at u = 0."""
    a = np.abs(values)
    safe = np.where(a > 0.0, a, 1.0)
    return np.where(a > 0.0, lam * safe ** (p_values - 2.0) * values, 0.0)


def eval_R(model: EnergyModel, u: GridFunction) -> float:
    _check(model, u)
    g = model.grid
    pv = model.p.values
    zeroth = g.nodal_weights * (model.lam * np.abs(u.values) ** pv / pv + model.j.value(u.values, model.j.nodal_exponent()))
    value = energy_J(u, model.p) - float(np.sum(zeroth))
    if not math.isfinite(value):
        raise NonFiniteError("R is not finite", value=value)
    return value


def needed_subgradient(model: EnergyModel, u: GridFunction) -> tuple[np.ndarray, np.ndarray]:
    """
    (Au interior, needed v*) where needed is the nodal value that would make
    the residual vanish: (Au)_k / w_k - lam |u_k|^{p-2} u_k.
    """
    Au = apply_A(u, model.p).interior
    x = u.interior_values
    needed = Au / model.weights - reaction(model.p_interior, model.lam, x)
    return Au, needed


def _bounds(model: EnergyModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return clarke_bounds(model.j, x, model.px_interior)


def select_subgradient(model: EnergyModel, u: GridFunction, rule: str | SelectionRule) -> SubgradientSelection:
    _check(model, u)
    try:
        rule = SelectionRule(rule)
    except ValueError as e:
        raise ConfigError(f"unknown selection rule {rule!r}", field="rule") from e
    lo, hi = _bounds(model, u.interior_values)
    if rule is SelectionRule.LO:
        vals = lo.copy()
    elif rule is SelectionRule.HI:
        vals = hi.copy()
    elif rule is SelectionRule.MIDPOINT:
        vals = 0.5 * (lo + hi)
    else:
        _, needed = needed_subgradient(model, u)
        vals = np.clip(needed, lo, hi)
    return SubgradientSelection(vals, lo, hi, rule)


def residual(model: EnergyModel, u: GridFunction, selection: SubgradientSelection | None = None) -> ResidualReport:
    """Residual dual vector, surrogate dual norm and per-node inclusion gap."""
    _check(model, u)
    if selection is None:
        selection = select_subgradient(model, u, SelectionRule.NEAREST)
    Au, needed = needed_subgradient(model, u)
    x = u.interior_values
    dual = Au - model.weights * (reaction(model.p_interior, model.lam, x) + selection.values)
    gap = np.maximum(np.maximum(selection.lo - needed, needed - selection.hi), 0.0)
    m = float(np.sqrt(np.sum(dual * dual / model.diag_K)))
    return ResidualReport(dual=dual, m_estimate=m, gap=gap, needed=needed, selection=selection)


def m_estimate(model: EnergyModel, u: GridFunction) -> float:
    return residual(model, u).m_estimate


# ===== PS diagnostics =====

def ps_diagnostics(model: EnergyModel, sequence: Sequence[GridFunction], tol: float = PS_CAUCHY_TOL) -> dict:
    """
    Discrete shadows of the PS condition on a sequence: bounded energies,
    vanishing residual, bounded norms and a Cauchy tail.
    """
    if len(sequence) < 2:
        raise VexpError("PS diagnostics need at least 2 iterates")
    R_vals = [eval_R(model, u) for u in sequence]
    m_vals = [m_estimate(model, u) for u in sequence]
    norms = [sobolev_norm(u, model.p) for u in sequence]

    r_scale = PS_GROWTH_FACTOR * (abs(R_vals[0]) + 1.0)
    n_scale = PS_GROWTH_FACTOR * (norms[0] + 1.0)
    tail = sequence[-min(PS_CAUCHY_TAIL, len(sequence)):]
    tail_diff = max(sobolev_norm(a - b, model.p) for a, b in zip(tail[:-1], tail[1:]))
    return {
        "R": R_vals,
        "m": m_vals,
        "norms": norms,
        "R_bounded": max(abs(r) for r in R_vals) <= r_scale,
        "norm_bounded": max(norms) <= n_scale,
        "norm_unbounded_flag": max(norms) > n_scale,
        "m_decreasing": m_vals[-1] <= m_vals[0],
        "m_vanishing": m_vals[-1] <= tol,
        "cauchy_tail": tail_diff,
        "cauchy": tail_diff <= tol * (1.0 + norms[-1]),
    }


# ===== Geometry constants =====

def default_theta(p: ExponentField) -> float:
    """(p+ + p_hat_star) / 2 clipped to (p+, p_hat_star]; p+ + 1 when p_hat_star is infinite."""
    p_hat = hat_star(p.p_minus, p.grid.dimension)
    if math.isinf(p_hat):
        return p.p_plus + 1.0
    theta = 0.5 * (p.p_plus + p_hat)
    return min(max(theta, math.nextafter(p.p_plus, math.inf)), p_hat)


def geometry_constants(
    model: EnergyModel,
    lam_star: float,
    mu: float | None = None,
    theta: float | None = None,
    samples: Sequence[GridFunction] = (),
) -> dict:
    """
    beta1 from the geometry lemma, theta, and beta2 fitted on samples with
    |u| < 1 so that R(u) >= beta1 |u|^{p+} - beta2 |u|^theta.
    """
    p = model.p
    mu = mu if mu is not None else (model.j.metadata.mu_claim or 0.0)
    if model.lam > 0:
        beta1 = min(1.0 / p.p_plus - model.lam / (lam_star * p.p_minus), mu / 2.0)
    else:
        beta1 = min(1.0 / p.p_plus, mu / 2.0)
    theta = default_theta(p) if theta is None else float(theta)

    beta2 = 0.0
    used = 0
    for u in samples:
        n = sobolev_norm(u, p)
        if not 0.0 < n < 1.0:
            continue
        used += 1
        need = (beta1 * n**p.p_plus - eval_R(model, u)) / n**theta
        beta2 = max(beta2, need)
    return {
        "beta1": beta1,
        "beta2": beta2,
        "theta": theta,
        "samples_used": used,
        "beta1_positive": beta1 > 0.0,
    }


# ===== Generalized Jacobian =====

def _slope_derivative(j: PiecewisePotential, k: int, t: np.ndarray, px: np.ndarray | None) -> np.ndarray:
    h = 1e-7 * np.maximum(1.0, np.abs(t))
    return (j.slope_on_piece(k, t + h, px) - j.slope_on_piece(k, t - h, px)) / (2.0 * h)


@dataclass
class ActiveSet:
    """Per interior node: the piece that supplies v*, and nodes pinned at a kink."""
    pieces: np.ndarray
    pinned: np.ndarray
    targets: np.ndarray = field(default_factory=lambda: np.zeros(0))


def active_set(model: EnergyModel, x: np.ndarray, needed: np.ndarray, tol: float = BREAKPOINT_TOL) -> ActiveSet:
    """
    Nodes within tol of a breakpoint whose needed v* lies in the Clarke
    interval are pinned there; other nodes take the piece of the selected endpoint.
    """
    j = model.j
    px = model.px_interior
    pieces = j.piece_index(x)
    pinned = np.zeros(x.size, dtype=bool)
    targets = np.zeros(x.size)
    if not j.breakpoints:
        return ActiveSet(pieces, pinned, targets)
    bp = np.asarray(j.breakpoints)
    dist = np.abs(x[:, None] - bp[None, :])
    nearest = np.argmin(dist, axis=1)
    near = dist[np.arange(x.size), nearest] < tol
    for i in np.flatnonzero(near):
        k = int(nearest[i])
        pi = None if px is None else px[i:i + 1]
        left = float(j.slope_on_piece(k, x[i:i + 1], pi)[0])
        right = float(j.slope_on_piece(k + 1, x[i:i + 1], pi)[0])
        lo, hi = min(left, right), max(left, right)
        if lo <= needed[i] <= hi:
            pinned[i] = True
            targets[i] = bp[k]
        else:
            endpoint = lo if needed[i] < lo else hi
            pieces[i] = k if endpoint == left else k + 1
    return ActiveSet(pieces, pinned, targets)


def residual_jacobian(model: EnergyModel, u: GridFunction, active: ActiveSet | None = None) -> sp.csr_matrix:
    """
    Generalized Jacobian of the nodal residual on the active pieces.
    Pinned rows are replaced by identity rows (equation u_k = breakpoint).
    """
    _check(model, u)
    x = u.interior_values
    if active is None:
        _, needed = needed_subgradient(model, u)
        active = active_set(model, x, needed)
    JA = jacobian_A(u, model.p)
    pv = model.p_interior
    d_react = model.lam * (pv - 1.0) * (x * x + GRADIENT_EPS**2) ** ((pv - 2.0) / 2.0)
    px = model.px_interior
    d_slope = np.zeros(x.size)
    for k in np.unique(active.pieces):
        mask = active.pieces == k
        d_slope[mask] = _slope_derivative(model.j, int(k), x[mask], None if px is None else px[mask])
    J = sp.csr_matrix(JA - sp.diags(model.weights * (d_react + d_slope)))
    if np.any(active.pinned):
        keep = sp.diags((~active.pinned).astype(float))
        J = sp.csr_matrix(keep @ J + sp.diags(active.pinned.astype(float)))
    return J
