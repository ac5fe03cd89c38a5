"""
Mountain-pass pipeline: geometry, far point, discrete minimax, polish, certificate.

The path gamma: [0, 1] -> W is stored as `path_nodes` grid functions joined
piecewise-linearly. Each iteration deforms the node carrying the largest R
with a preconditioned descent step; the endpoints 0 and u_bar never move.
For superlinear potentials the moved node is kept at the maximum of R along
its ray. The path-maximum point is then polished by an active-set
semismooth Newton iteration on the nodal residual.

Sampled quantities (eta in particular) are upper bounds of the infima they
stand for.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.sparse.linalg import spsolve

from config import (
    DEFAULT_MAX_ITERS,
    DEFAULT_PATH_NODES,
    DEFAULT_RHO_GRID,
    DEFAULT_SAMPLES_PER_SPHERE,
    DEFAULT_SEED,
    DEFAULT_T_MAX,
    DEFAULT_TOL,
    MONOTONE_TOL,
    NEWTON_MAX_ITERS,
    NEWTON_SNAP_TOL,
    PATH_SWITCH_TOL,
    RAY_T_MAX,
    RAY_T_MIN,
    RAY_XTOL,
    REDISTRIBUTE_EVERY,
    RELEASE_TOL,
    TIE_TOL,
)
from lib.errors import FarPointNotFoundError, GeometryNotFoundError, VexpError
from numerics.discrete_operator import (
    ARMIJO_C,
    MIN_STEP,
    apply_A,
    first_eigenvector,
    precondition,
    stiffness_matrix,
)
from numerics.energy import (
    ActiveSet,
    EnergyModel,
    ResidualReport,
    active_set,
    eval_R,
    needed_subgradient,
    reaction,
    residual,
    residual_jacobian,
)
from numerics.exponent_domain import GridFunction
from numerics.modular_spaces import sobolev_norm
from numerics.potential.audits import audit_far_point

logger = logging.getLogger(__name__)


class PassMode(str, Enum):
    H1 = "H1"
    H2 = "H2"


@dataclass(frozen=True)
class GeometryCertificate:
    rho: float
    eta: float
    R_far: float | None = None
    samples_used: int = 0
    per_rho: list[dict[str, float]] = field(default_factory=list)

    @property
    def validates(self) -> bool:
        """eta > max{R(0), R(u_bar)} with R(0) = 0."""
        return self.R_far is not None and self.eta > max(0.0, self.R_far)

    def with_far_point(self, R_far: float) -> "GeometryCertificate":
        return replace(self, R_far=float(R_far))

    def to_dict(self) -> dict[str, Any]:
        return {
            "rho": self.rho,
            "eta": self.eta,
            "R_far": self.R_far,
            "samples_used": self.samples_used,
            "validates": self.validates,
            "per_rho": self.per_rho,
        }


@dataclass
class Path:
    """Path nodes from 0 to u_bar with their parameters tau in [0, 1]."""
    nodes: list[GridFunction]
    tau: np.ndarray

    def __post_init__(self) -> None:
        if len(self.nodes) != self.tau.size or len(self.nodes) < 3:
            raise VexpError("a path needs at least 3 nodes and one tau per node")
        if not self.nodes[0].is_zero:
            raise VexpError("a path starts at 0")

    @classmethod
    def straight(cls, u_bar: GridFunction, count: int) -> "Path":
        tau = np.linspace(0.0, 1.0, count)
        return cls([u_bar.scaled(float(t)) for t in tau[:-1]] + [u_bar], tau)

    @property
    def start(self) -> GridFunction:
        return self.nodes[0]

    @property
    def end(self) -> GridFunction:
        return self.nodes[-1]


@dataclass
class MountainPassResult:
    u_candidate: GridFunction
    c_estimate: float
    critical_value: float
    m_estimate: float
    max_gap: float
    geometry: GeometryCertificate
    path_history: list[float]
    converged: bool
    iterations: int
    seed: int
    refined: bool = False
    reasons: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "c_estimate": self.c_estimate,
            "critical_value": self.critical_value,
            "m_estimate": self.m_estimate,
            "max_gap": self.max_gap,
            "rho": self.geometry.rho,
            "eta": self.geometry.eta,
            "converged": self.converged,
            "iterations": self.iterations,
            "seed": self.seed,
            "refined": self.refined,
            "reasons": self.reasons,
            "path_history": self.path_history,
        }


# ===== Geometry =====

def _unit(model: EnergyModel) -> np.ndarray:
    lo = np.array([b[0] for b in model.grid.bounds])
    hi = np.array([b[1] for b in model.grid.bounds])
    return (model.grid.coordinates - lo) / (hi - lo)


def _sine_modes(model: EnergyModel, count: int) -> list[GridFunction]:
    """Low Dirichlet sine modes ordered by total frequency."""
    s = _unit(model)
    dim = model.grid.dimension
    freqs = sorted(np.ndindex(*([count] * dim)), key=lambda k: (sum(k), k))
    out = []
    for k in freqs[:count]:
        profile = np.prod([np.sin(np.pi * (k[a] + 1) * s[:, a]) for a in range(dim)], axis=0)
        mode = GridFunction.from_function(model.grid, lambda _x, pr=profile: pr)
        if not mode.is_zero:
            out.append(mode)
    return out


def sample_sphere_directions(model: EnergyModel, count: int = DEFAULT_SAMPLES_PER_SPHERE,
                             seed: int = DEFAULT_SEED) -> list[GridFunction]:
    """
    Directions for sphere sampling: the first eigenvector with both signs,
    low sine modes, then seeded random combinations of those modes.
    """
    if count < 2:
        raise VexpError("sphere sampling needs at least 2 directions", count=count)
    _, e1 = first_eigenvector(model.grid)
    out = [e1, e1.scaled(-1.0)]
    modes = _sine_modes(model, min(6, max(1, model.grid.interior.size)))
    out += modes[1:max(1, count // 3)]
    basis = np.stack([m.values for m in modes])
    rng = np.random.default_rng(seed)
    while len(out) < count:
        coeff = rng.standard_normal(len(modes))
        values = coeff @ basis
        if np.any(values):
            out.append(GridFunction(model.grid, values))
    return out[:count]


def verify_geometry(
    model: EnergyModel,
    rho_grid: Sequence[float] = DEFAULT_RHO_GRID,
    samples_per_sphere: int = DEFAULT_SAMPLES_PER_SPHERE,
    seed: int = DEFAULT_SEED,
) -> GeometryCertificate:
    """
    Sample R on spheres ||u|| = rho and keep the rho with the largest sampled
    infimum. The sampled eta bounds the true infimum from above.
    """
    if not rho_grid:
        raise VexpError("rho grid is empty")
    directions = sample_sphere_directions(model, samples_per_sphere, seed)
    unit = [d.scaled(1.0 / sobolev_norm(d, model.p)) for d in directions]

    per_rho = []
    best_rho, best_eta = math.nan, -math.inf
    for rho in rho_grid:
        if not 0.0 < rho < 1.0:
            raise VexpError("rho must lie in (0, 1)", rho=rho)
        eta = min(eval_R(model, d.scaled(rho)) for d in unit)
        per_rho.append({"rho": float(rho), "eta": float(eta)})
        logger.debug("sphere rho=%g: sampled inf R=%.6g", rho, eta)
        if eta > best_eta:
            best_rho, best_eta = float(rho), float(eta)

    if not best_eta > 0.0:
        raise GeometryNotFoundError(
            "no sphere with a positive sampled infimum of R; lower lambda or change the potential",
            per_rho=per_rho,
        )
    return GeometryCertificate(rho=best_rho, eta=best_eta, samples_used=len(unit) * len(per_rho), per_rho=per_rho)


def find_far_point(
    model: EnergyModel,
    u0: GridFunction | None,
    t_max: float = DEFAULT_T_MAX,
    rho: float = 0.0,
    mode: str | PassMode = PassMode.H2,
    u_bar: GridFunction | None = None,
) -> GridFunction:
    """
    H2: t * u0 for the first doubling t in {1, 2, 4, ...} <= t_max with
    R(t u0) <= 0 and ||t u0|| > rho.
    H1: the supplied u_bar, once the far point audit accepts it.
    """
    mode = PassMode(mode)
    if mode is PassMode.H1:
        if u_bar is None:
            raise FarPointNotFoundError("H1 mode needs problem.u_bar")
        audit = audit_far_point(model.j, u_bar, model.lam, model.p)
        if audit.failed:
            raise FarPointNotFoundError("u_bar fails the far point audit", audit=audit.to_dict())
        R_bar = eval_R(model, u_bar)
        if R_bar > 0.0 or sobolev_norm(u_bar, model.p) <= rho:
            raise FarPointNotFoundError("u_bar must satisfy R(u_bar) <= 0 and ||u_bar|| > rho",
                                        R=R_bar, rho=rho)
        return u_bar

    if u0 is None or u0.is_zero:
        raise FarPointNotFoundError("far point scan needs a nonzero u0")
    t = 1.0
    while t <= t_max:
        candidate = u0.scaled(t)
        R_t = eval_R(model, candidate)
        logger.debug("ray scan t=%g R=%.6g", t, R_t)
        if R_t <= 0.0 and sobolev_norm(candidate, model.p) > rho:
            return candidate
        t *= 2.0
    raise FarPointNotFoundError(
        "R stays positive along the ray up to t_max; raise t_max or check the superlinear hypothesis",
        t_max=t_max,
    )


# ===== Ray maximum =====

def ray_derivative(model: EnergyModel, w: GridFunction, t: float) -> float:
    """d/dt R(t w) with the single-valued piece slope of j at each node."""
    x = w.interior_values
    Au = apply_A(w.scaled(t), model.p).interior
    zeroth = reaction(model.p_interior, model.lam, t * x) + model.j.slope(t * x, model.px_interior)
    return float(Au @ x - np.sum(model.weights * zeroth * x))


def ray_maximum(model: EnergyModel, w: GridFunction) -> GridFunction | None:
    """
    t* w where d/dt R(t w) changes sign from + to -, bracketed from [1/2, 2]
    by halving and doubling. None when the bracket leaves
    [RAY_T_MIN, RAY_T_MAX].
    """
    if w.is_zero:
        return None

    def g(t: float) -> float:
        return ray_derivative(model, w, t)

    lo, hi = 0.5, 2.0
    while g(lo) <= 0.0:
        lo *= 0.5
        if lo < RAY_T_MIN:
            return None
    while g(hi) >= 0.0:
        hi *= 2.0
        if hi > RAY_T_MAX:
            return None
    t = brentq(g, lo, hi, xtol=RAY_XTOL)
    return w.scaled(float(t))


# ===== Newton polish =====

def _piece_slopes(model: EnergyModel, x: np.ndarray, pieces: np.ndarray) -> np.ndarray:
    px = model.px_interior
    out = np.zeros(x.size)
    for k in np.unique(pieces):
        mask = pieces == k
        out[mask] = model.j.slope_on_piece(int(k), x[mask], None if px is None else px[mask])
    return out


def _state_residual(model: EnergyModel, u: GridFunction, active: ActiveSet) -> np.ndarray:
    """Free rows: residual on the fixed piece. Pinned rows: u_k - breakpoint."""
    x = u.interior_values
    Au = apply_A(u, model.p).interior
    F = Au - model.weights * (reaction(model.p_interior, model.lam, x) + _piece_slopes(model, x, active.pieces))
    F[active.pinned] = (x - active.targets)[active.pinned]
    return F


def _update_active(model: EnergyModel, x: np.ndarray, needed: np.ndarray,
                   active: ActiveSet) -> tuple[np.ndarray, ActiveSet]:
    """
    Release pinned nodes whose needed v* left the Clarke interval (to the
    left piece when it is too large, to the right piece when too small) and
    pin free nodes that crossed a breakpoint at the first breakpoint crossed.
    """
    j = model.j
    if not j.breakpoints:
        return x, active
    bp = np.asarray(j.breakpoints)
    px = model.px_interior
    x = x.copy()
    pieces, pinned, targets = active.pieces.copy(), active.pinned.copy(), active.targets.copy()

    for i in np.flatnonzero(active.pinned):
        k = int(np.searchsorted(bp, targets[i]))
        pi = None if px is None else px[i:i + 1]
        left = float(j.slope_on_piece(k, x[i:i + 1], pi)[0])
        right = float(j.slope_on_piece(k + 1, x[i:i + 1], pi)[0])
        if needed[i] > max(left, right) + RELEASE_TOL:
            pinned[i], pieces[i] = False, k
        elif needed[i] < min(left, right) - RELEASE_TOL:
            pinned[i], pieces[i] = False, k + 1

    free = np.flatnonzero(~active.pinned)
    now = j.piece_index(x[free])
    for i, k_new in zip(free, now):
        old = int(pieces[i])
        if k_new == old:
            continue
        b = bp[old] if k_new > old else bp[old - 1]
        pinned[i], targets[i], x[i] = True, b, b
    return x, ActiveSet(pieces, pinned, targets)


def refine_critical_point(
    model: EnergyModel,
    u: GridFunction,
    tol: float = DEFAULT_TOL,
    max_iters: int = NEWTON_MAX_ITERS,
) -> tuple[GridFunction, ResidualReport, bool, int]:
    """
    Active-set semismooth Newton on the nodal residual.

    Nodes within NEWTON_SNAP_TOL of a breakpoint whose needed v* lies in the
    Clarke interval start pinned there. Each step solves the system of the
    current pieces with a line search on its squared norm, then pins nodes
    that crossed a breakpoint and releases pinned nodes the residual pushes
    off. Convergence is judged on the true residual.
    Returns (u, report, converged, iterations).
    """
    grid = model.grid
    x = u.interior_values.copy()
    _, needed = needed_subgradient(model, u)
    active = active_set(model, x, needed, tol=NEWTON_SNAP_TOL)
    x = np.where(active.pinned, active.targets, x)
    u = GridFunction.from_interior(grid, x)
    report = residual(model, u)
    it = 0
    for it in range(1, max_iters + 1):
        if report.m_estimate <= tol and report.max_gap <= tol:
            return u, report, True, it - 1
        F = _state_residual(model, u, active)
        merit = float(F @ F)
        trial_x, trial_u, step = x, u, 0.0
        if merit > 0.0:
            J = residual_jacobian(model, u, active)
            try:
                delta = spsolve(J.tocsc(), -F)
            except RuntimeError:
                logger.warning("singular Newton system at iteration %d", it)
                break
            if not np.all(np.isfinite(delta)):
                break
            step = 1.0
            while step >= MIN_STEP:
                trial_x = x + step * delta
                trial_u = GridFunction.from_interior(grid, trial_x)
                trial_F = _state_residual(model, trial_u, active)
                if float(trial_F @ trial_F) <= (1.0 - ARMIJO_C * step) * merit:
                    break
                step *= 0.5
            else:
                logger.debug("Newton line search stalled at m=%.3e", report.m_estimate)
                break
        _, needed = needed_subgradient(model, trial_u)
        x, next_active = _update_active(model, trial_x, needed, active)
        if step == 0.0 and np.array_equal(next_active.pinned, active.pinned) \
                and np.array_equal(next_active.pieces, active.pieces):
            break
        active = next_active
        u = GridFunction.from_interior(grid, x)
        report = residual(model, u)
        logger.debug("Newton %d: m=%.3e gap=%.3e step=%g pinned=%d",
                     it, report.m_estimate, report.max_gap, step, int(active.pinned.sum()))
    done = report.m_estimate <= tol and report.max_gap <= tol
    return u, report, done, it


# ===== Minimax =====

def _knorm(K, v: np.ndarray) -> float:
    return float(np.sqrt(max(v @ (K @ v), 0.0)))


def _path_max(values: list[float], ms: list[float | None], model: EnergyModel, path: Path) -> int:
    """Interior path node with max R; ties within TIE_TOL go to the largest m."""
    inner = range(1, len(values) - 1)
    top = max(values[k] for k in inner)
    tied = [k for k in inner if values[k] >= top - TIE_TOL]
    if len(tied) == 1:
        return tied[0]
    for k in tied:
        if ms[k] is None:
            ms[k] = residual(model, path.nodes[k]).m_estimate
    return max(tied, key=lambda k: (ms[k], -k))


def _redistribute(model: EnergyModel, path: Path) -> Path:
    """Equal Sobolev arc length between nodes, endpoints fixed."""
    lengths = [sobolev_norm(b - a, model.p) for a, b in zip(path.nodes[:-1], path.nodes[1:])]
    arc = np.concatenate([[0.0], np.cumsum(lengths)])
    if arc[-1] <= 0.0:
        return path
    targets = np.linspace(0.0, arc[-1], len(path.nodes))
    nodes = [path.start]
    for s in targets[1:-1]:
        k = min(int(np.searchsorted(arc, s, side="right")) - 1, len(lengths) - 1)
        frac = 0.0 if lengths[k] == 0.0 else (s - arc[k]) / lengths[k]
        a, b = path.nodes[k], path.nodes[k + 1]
        nodes.append(GridFunction(model.grid, (1.0 - frac) * a.values + frac * b.values))
    nodes.append(path.end)
    return Path(nodes, targets / arc[-1])


def _lift_max(model: EnergyModel, path: Path, values: list[float], on_ridge: list[bool]) -> bool:
    """Move the path maximum node to the ray maximum through it. False if none exists."""
    k = _path_max(values, [None] * len(path.nodes), model, path)
    top = ray_maximum(model, path.nodes[k])
    if top is None:
        return False
    path.nodes[k], values[k] = top, eval_R(model, top)
    on_ridge[k] = True
    return True


def minimax_solve(
    model: EnergyModel,
    u_bar: GridFunction,
    path_nodes: int = DEFAULT_PATH_NODES,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
    geometry: GeometryCertificate | None = None,
    seed: int = DEFAULT_SEED,
    switch_tol: float = PATH_SWITCH_TOL,
    newton_max_iters: int = NEWTON_MAX_ITERS,
    mode: str | PassMode = PassMode.H2,
) -> MountainPassResult:
    """
    Deform a straight path 0 -> u_bar by descending its maximum node, then
    polish that node with `refine_critical_point`.

    In H2 mode the initial maximum node is lifted onto the ridge and kept
    there: each of its trial points is moved to the maximum of R along its
    ray, so it cannot slip between path nodes below the pass. Other nodes,
    and every node in H1 mode or when no ray maximum exists, take plain
    descent steps capped by half the distance to their neighbours.

    The path maximum is non-increasing: only the max node moves during a
    descent step, and a redistribution that would raise the max is dropped.
    """
    grid = model.grid
    model.grid.check_same(u_bar.grid)
    if path_nodes < 3:
        raise VexpError("path_nodes must be at least 3", path_nodes=path_nodes)
    if geometry is None:
        geometry = verify_geometry(model, seed=seed)
    R_far = eval_R(model, u_bar)
    geometry = geometry.with_far_point(R_far)
    if not geometry.validates:
        logger.warning("far point does not validate the geometry: eta=%.6g R(u_bar)=%.6g", geometry.eta, R_far)

    K = stiffness_matrix(grid)
    path = Path.straight(u_bar, path_nodes)
    values = [eval_R(model, u) for u in path.nodes]
    values[0] = 0.0
    on_ridge = [False] * len(path.nodes)
    ridge = PassMode(mode) is PassMode.H2 and _lift_max(model, path, values, on_ridge)
    if PassMode(mode) is PassMode.H2 and not ridge:
        logger.info("no ray maximum through the path maximum; using plain descent")
    history: list[float] = [max(values[1:-1])]
    it = 0
    stalled = exhausted = False
    for it in range(1, max_iters + 1):
        ms: list[float | None] = [None] * len(path.nodes)
        k = _path_max(values, ms, model, path)
        u = path.nodes[k]
        report = residual(model, u)
        if report.m_estimate <= switch_tol:
            logger.debug("path max m=%.3e below switch tolerance at iteration %d", report.m_estimate, it)
            break

        r = report.dual
        d = -precondition(grid, r)
        slope = float(r @ d)
        if slope >= 0.0:
            stalled = True
            break
        lift = on_ridge[k]
        if lift:
            step = 1.0
        else:
            reach = min(_knorm(K, (path.nodes[k - 1] - u).interior_values),
                        _knorm(K, (path.nodes[k + 1] - u).interior_values))
            step = min(1.0, 0.5 * reach / max(_knorm(K, d), 1e-300))
        accepted = None
        x = u.interior_values
        while step >= MIN_STEP:
            trial: GridFunction | None = GridFunction.from_interior(grid, x + step * d)
            if lift:
                trial = ray_maximum(model, trial)
            if trial is not None:
                R_trial = eval_R(model, trial)
                if R_trial <= values[k] + ARMIJO_C * step * slope:
                    accepted = (trial, R_trial)
                    break
            step *= 0.5
        if accepted is None:
            stalled = True
            logger.debug("descent stalled at path node %d", k)
            break
        path.nodes[k], values[k] = accepted

        if it % REDISTRIBUTE_EVERY == 0:
            moved = _redistribute(model, path)
            new_values = [0.0] + [eval_R(model, v) for v in moved.nodes[1:]]
            new_on_ridge = [False] * len(moved.nodes)
            if ridge:
                _lift_max(model, moved, new_values, new_on_ridge)
            if max(new_values[1:-1]) <= max(values[1:-1]) + MONOTONE_TOL:
                path, values, on_ridge = moved, new_values, new_on_ridge
            else:
                logger.debug("redistribution rejected at iteration %d", it)
        history.append(max(values[1:-1]))
        if it % 100 == 0:
            logger.debug("minimax %d: max R=%.8g m=%.3e", it, history[-1], report.m_estimate)
    else:
        exhausted = True

    reasons: list[str] = []
    if stalled:
        reasons.append("path descent stalled")
    if exhausted:
        reasons.append("minimax iteration cap reached")

    k = _path_max(values, [None] * len(path.nodes), model, path)
    start = path.nodes[k]
    polished, report, newton_ok, _ = refine_critical_point(model, start, tol, newton_max_iters)
    refined = False
    if newton_ok and sobolev_norm(polished, model.p) >= geometry.rho / 2.0:
        u_cand = polished
        refined = True
        path.nodes[k] = polished
        values[k] = eval_R(model, polished)
    else:
        if newton_ok:
            reasons.append("polish collapsed below rho/2")
        else:
            reasons.append("Newton polish did not reach tolerance")
        u_cand = start
        report = residual(model, start)

    critical_value = eval_R(model, u_cand)
    c_estimate = max(values[1:-1])
    norm = sobolev_norm(u_cand, model.p)
    converged = refined and report.m_estimate <= tol and report.max_gap <= tol
    if converged and c_estimate < geometry.eta - tol:
        reasons.append("c_estimate below eta")
        converged = False
    if converged and norm < geometry.rho / 2.0:
        reasons.append("candidate inside rho/2")
        converged = False
    if not converged:
        logger.warning("mountain pass not converged: %s", "; ".join(reasons) or "tolerance not met")

    return MountainPassResult(
        u_candidate=u_cand,
        c_estimate=float(c_estimate),
        critical_value=float(critical_value),
        m_estimate=report.m_estimate,
        max_gap=report.max_gap,
        geometry=geometry,
        path_history=[float(h) for h in history],
        converged=bool(converged),
        iterations=it,
        seed=seed,
        refined=refined,
        reasons=reasons,
    )


# ===== Certificate =====

def certify_solution(model: EnergyModel, u: GridFunction, tol: float = DEFAULT_TOL) -> dict[str, Any]:
    """Pass iff the per-node inclusion gap is within tol and the trace is exactly 0."""
    model.grid.check_same(u.grid)
    boundary_zero = bool(np.all(u.values[model.grid.boundary_mask] == 0.0))
    if not boundary_zero:
        u = GridFunction(model.grid, np.where(model.grid.boundary_mask, 0.0, u.values))
    report = residual(model, u)
    return {
        "verdict": "pass" if boundary_zero and report.max_gap <= tol else "fail",
        "trivial": u.is_zero,
        "boundary_zero": boundary_zero,
        "max_gap": report.max_gap,
        "m_estimate": report.m_estimate,
        "report": report,
    }
