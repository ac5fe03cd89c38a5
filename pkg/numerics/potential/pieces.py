"""
Piecewise-C1 potentials j(x, t).

x enters only through the exponent field p(x): every piece evaluator is a
function of (t, px) where px holds p(x) at the evaluation points. Pieces are
indexed by the sorted t-breakpoints; piece k covers (b[k-1], b[k]].
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable

import numpy as np

from lib.errors import PotentialError
from numerics.exponent_domain import ExponentField

logger = logging.getLogger(__name__)

Evaluator = Callable[[np.ndarray, np.ndarray | None], np.ndarray]


@dataclass(frozen=True)
class Piece:
    value: Evaluator
    slope: Evaluator


@dataclass(frozen=True)
class PotentialMetadata:
    """
    Declared constants consumed by the audits.

    growth_*: bound |v| <= a + c1 |t|^{r - 1} on the Clarke subdifferential
    mu_claim: local negativity constant near t = 0
    nu, M:    superlinear exponent and threshold
    tang_c:   constant of the asymptotic sign condition
    """
    growth_a: float | None = None
    growth_c1: float | None = None
    growth_r: float | None = None
    mu_claim: float | None = None
    nu: float | None = None
    M: float | None = None
    tang_c: float | None = None


@dataclass(frozen=True, eq=False)
class PiecewisePotential:
    name: str
    breakpoints: tuple[float, ...]
    pieces: tuple[Piece, ...]
    exponent: ExponentField | None = None
    params: dict[str, Any] = field(default_factory=dict)
    metadata: PotentialMetadata = field(default_factory=PotentialMetadata)

    def __post_init__(self) -> None:
        if len(self.pieces) != len(self.breakpoints) + 1:
            raise PotentialError(
                f"{self.name}: {len(self.breakpoints)} breakpoints need {len(self.breakpoints) + 1} pieces"
            )
        if list(self.breakpoints) != sorted(self.breakpoints):
            raise PotentialError(f"{self.name}: breakpoints must be sorted")

    def with_metadata(self, **overrides: Any) -> "PiecewisePotential":
        """Copy with some declared constants replaced (None values are ignored)."""
        clean = {k: float(v) for k, v in overrides.items() if v is not None}
        return replace(self, metadata=replace(self.metadata, **clean))

    @property
    def is_smooth(self) -> bool:
        return not self.breakpoints

    def nodal_exponent(self) -> np.ndarray | None:
        return None if self.exponent is None else self.exponent.values

    def exponent_at(self, x: Any) -> float | None:
        if self.exponent is None:
            return None
        return float(self.exponent.at(x)[0])

    def piece_index(self, t: np.ndarray) -> np.ndarray:
        return np.searchsorted(np.asarray(self.breakpoints), t, side="left")

    def _apply(self, which: str, idx: np.ndarray, t: np.ndarray, px: np.ndarray | None) -> np.ndarray:
        out = np.empty_like(t)
        for k, piece in enumerate(self.pieces):
            mask = idx == k
            if np.any(mask):
                fn = getattr(piece, which)
                out[mask] = fn(t[mask], None if px is None else px[mask])
        return out

    def _prepare(self, t: Any, px: Any) -> tuple[np.ndarray, np.ndarray | None]:
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        if px is None:
            return t_arr, None
        return t_arr, np.broadcast_to(np.asarray(px, dtype=float), t_arr.shape).copy()

    def value(self, t: Any, px: Any = None) -> np.ndarray:
        """j(x, t) with px = p(x) at the same points (broadcast)."""
        t_arr, px_arr = self._prepare(t, px)
        with np.errstate(over="ignore"):
            return self._apply("value", self.piece_index(t_arr), t_arr, px_arr)

    def slope(self, t: Any, px: Any = None) -> np.ndarray:
        """d j / d t using the piece that owns t (left piece at a breakpoint)."""
        t_arr, px_arr = self._prepare(t, px)
        with np.errstate(over="ignore"):
            return self._apply("slope", self.piece_index(t_arr), t_arr, px_arr)

    def slope_on_piece(self, k: int, t: np.ndarray, px: np.ndarray | None) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.pieces[k].slope(t, px)


# ===== Builders =====

def _even(name: str, abs_breaks: list[float], parts: list[tuple[Evaluator, Evaluator]], **kw: Any) -> PiecewisePotential:
    """
    Build an even potential j(t) = g(|t|) from pieces of g on (0, b1], (b1, b2], ...
    The slope of piece g_k is g_k'(|t|) sgn(t).
    """
    def mirrored(g: Evaluator, dg: Evaluator) -> Piece:
        return Piece(
            value=lambda t, px: g(np.abs(t), px),
            slope=lambda t, px: dg(np.abs(t), px) * np.sign(t),
        )

    outer = [mirrored(g, dg) for g, dg in parts]
    breakpoints = tuple([-b for b in reversed(abs_breaks)] + list(abs_breaks))
    # (-inf, -b_n], ..., (-b_1, b_1], ..., (b_n, inf)
    pieces = tuple(list(reversed(outer[1:])) + outer)
    return PiecewisePotential(name=name, breakpoints=breakpoints, pieces=pieces, **kw)


def _check_exponent_pair(name: str, p: ExponentField, q_plus: float) -> None:
    if not p.p_minus > 1.0:
        raise PotentialError(f"{name}: needs p- > 1", p_minus=p.p_minus)
    if not q_plus > p.p_plus:
        raise PotentialError(f"{name}: needs p+ < q+", p_plus=p.p_plus, q_plus=q_plus)


def make_j1(mu: float, sigma: float, p: ExponentField, q_plus: float) -> PiecewisePotential:
    """
    Three-piece potential with breakpoints |t| = 1 and |t| = 2:
    -mu |t|^p, then (mu + sigma - 2^q)|t| - 2 mu - sigma + 2^q, then sigma - |t|^q.
    """
    if mu <= 0 or sigma <= 0:
        raise PotentialError("j1: mu and sigma must be positive", mu=mu, sigma=sigma)
    _check_exponent_pair("j1", p, q_plus)
    two_q = 2.0**q_plus
    slope2 = mu + sigma - two_q
    parts = [
        (lambda s, px: -mu * s**px, lambda s, px: -mu * px * s ** (px - 1.0)),
        (lambda s, px: slope2 * s - 2.0 * mu - sigma + two_q, lambda s, px: np.full_like(s, slope2)),
        (lambda s, px: sigma - s**q_plus, lambda s, px: -q_plus * s ** (q_plus - 1.0)),
    ]
    meta = PotentialMetadata(
        growth_a=mu * p.p_plus + sigma + two_q,
        growth_c1=q_plus,
        growth_r=q_plus,
        mu_claim=mu,
        M=2.0,
    )
    return _even("j1", [1.0, 2.0], parts, exponent=p,
                 params={"mu": mu, "sigma": sigma, "q_plus": q_plus}, metadata=meta)


def make_j2(mu: float, p: ExponentField, q_plus: float) -> PiecewisePotential:
    """Two-piece potential: -mu |t|^p for |t| <= 1, |t|^q - mu - 1 beyond."""
    if mu <= 0:
        raise PotentialError("j2: mu must be positive", mu=mu)
    _check_exponent_pair("j2", p, q_plus)
    parts = [
        (lambda s, px: -mu * s**px, lambda s, px: -mu * px * s ** (px - 1.0)),
        (lambda s, px: s**q_plus - mu - 1.0, lambda s, px: q_plus * s ** (q_plus - 1.0)),
    ]
    meta = PotentialMetadata(
        growth_a=mu * p.p_plus,
        growth_c1=q_plus,
        growth_r=q_plus,
        mu_claim=mu,
        nu=min(q_plus, p.p_plus + 1.0),
        # j2 > 0 beyond (mu + 1)^{1/q}
        M=max(2.0, (mu + 1.0) ** (1.0 / q_plus)),
    )
    return _even("j2", [1.0], parts, exponent=p,
                 params={"mu": mu, "q_plus": q_plus}, metadata=meta)


def make_smooth_benchmark(mu: float = 1.0) -> PiecewisePotential:
    """t^4/4 - mu t^2/2."""
    meta = PotentialMetadata(growth_a=mu, growth_c1=1.0 + mu, growth_r=4.0, mu_claim=mu / 2.0, nu=4.0,
                             M=max(2.0, 2.0 * np.sqrt(mu)))
    piece = Piece(value=lambda t, px: t**4 / 4.0 - mu * t**2 / 2.0, slope=lambda t, px: t**3 - mu * t)
    return PiecewisePotential("benchmark", (), (piece,), params={"mu": mu}, metadata=meta)


def make_power(coef: float, nu: float) -> PiecewisePotential:
    """coef |t|^nu (nu > 1)."""
    if nu <= 1.0:
        raise PotentialError("power: exponent must exceed 1", nu=nu)
    parts = [(lambda s, px: coef * s**nu, lambda s, px: coef * nu * s ** (nu - 1.0))]
    meta = PotentialMetadata(growth_a=0.0, growth_c1=abs(coef) * nu, growth_r=nu, nu=nu, M=1.0)
    return _even("power", [], parts, params={"coef": coef, "nu": nu}, metadata=meta)


def make_quadratic(coef: float) -> PiecewisePotential:
    """coef t^2."""
    piece = Piece(value=lambda t, px: coef * t**2, slope=lambda t, px: 2.0 * coef * t)
    meta = PotentialMetadata(growth_a=0.0, growth_c1=2.0 * abs(coef), growth_r=2.0)
    return PiecewisePotential("quadratic", (), (piece,), params={"coef": coef}, metadata=meta)


def make_abs(K: float) -> PiecewisePotential:
    """K |t|; Clarke interval [-K, K] at t = 0."""
    if K < 0:
        raise PotentialError("abs: K must be non-negative", K=K)
    pieces = (
        Piece(value=lambda t, px: -K * t, slope=lambda t, px: np.full_like(t, -K)),
        Piece(value=lambda t, px: K * t, slope=lambda t, px: np.full_like(t, K)),
    )
    meta = PotentialMetadata(growth_a=K, growth_c1=0.0, growth_r=2.0)
    return PiecewisePotential("abs", (0.0,), pieces, params={"K": K}, metadata=meta)


def make_exponential() -> PiecewisePotential:
    """e^t - 1, declared against a quadratic growth bound it cannot meet."""
    piece = Piece(value=lambda t, px: np.expm1(t), slope=lambda t, px: np.exp(t))
    meta = PotentialMetadata(growth_a=1.0, growth_c1=1.0, growth_r=2.0)
    return PiecewisePotential("exponential", (), (piece,), metadata=meta)


def make_zero() -> PiecewisePotential:
    piece = Piece(value=lambda t, px: np.zeros_like(t), slope=lambda t, px: np.zeros_like(t))
    meta = PotentialMetadata(growth_a=0.0, growth_c1=0.0, growth_r=2.0)
    return PiecewisePotential("zero", (), (piece,), metadata=meta)


def build_potential(preset: str, params: dict[str, Any], p: ExponentField) -> PiecewisePotential:
    """
    Build a potential from a preset name and its parameters.

    Raises:
        PotentialError: unknown preset or missing/invalid parameter
    """
    def need(key: str, default: float | None = None) -> float:
        val = params.get(key, default)
        if val is None:
            raise PotentialError(f"{preset}: missing parameter {key!r}")
        return float(val)

    if preset == "j1":
        j = make_j1(need("mu"), need("sigma"), p, need("q_plus"))
    elif preset == "j2":
        j = make_j2(need("mu"), p, need("q_plus"))
    elif preset == "benchmark":
        j = make_smooth_benchmark(need("mu", 1.0))
    elif preset == "power":
        j = make_power(need("coef", 1.0), need("nu"))
    elif preset == "quadratic":
        j = make_quadratic(need("coef"))
    elif preset == "abs":
        j = make_abs(need("K"))
    elif preset == "exponential":
        j = make_exponential()
    elif preset == "zero":
        j = make_zero()
    else:
        raise PotentialError(f"unknown potential preset: {preset!r}")

    j = j.with_metadata(
        growth_a=params.get("growth_a"),
        growth_c1=params.get("growth_c1"),
        growth_r=params.get("growth_r"),
        mu_claim=params.get("mu_claim"),
        nu=params.get("nu") if preset != "power" else None,
        M=params.get("M"),
        tang_c=params.get("tang_c"),
    )
    logger.debug("built potential %s with params %s", preset, params)
    return j
