"""
Sampled audits of the hypotheses on the potential.

Hypothesis ids:
- Hj_iii           growth bound on the Clarke subdifferential
- Hj_iv            local negativity near t = 0 (limsup)
- Hj1_v            asymptotic sign condition (limsup)
- Hj1_vi           far point inequality for a supplied u_bar
- Hj1_consequence  j >= -j0(t; -t) beyond M
- Hj2_v            superlinear condition, with the derived lower bound j >= l |t|^nu
- Hj2_scaling      k^nu j(t) <= j(k t) beyond M
- exponent_window  p+ <= r+ < p_hat_star for the declared growth exponent

limsup-type audits can only FAIL or stay INCONCLUSIVE: finite sampling
never certifies an asymptotic statement.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from config import (
    AUDIT_TOL,
    DEFAULT_MU_CLAIM,
    DEFAULT_SUPERLINEAR_M,
    DEFAULT_TANG_C,
    FAR_POINT_SCALES,
    GROWTH_T_MAX,
    LIMSUP_TAIL_SHELLS,
    MAX_WITNESSES,
    NEAR_ZERO_SHELLS,
    POINTS_PER_SHELL,
    SCALING_FACTORS,
    SUPERLINEAR_T_MAX,
    TANG_T_RANGE,
    X_SAMPLES,
)
from lib.errors import MetadataError, PotentialError
from numerics.exponent_domain import ExponentField, GridFunction, hat_star
from numerics.modular_spaces import (
    cell_modular,
    cell_values,
    gradient_magnitude,
    lumped_integral,
    sobolev_norm,
)
from numerics.potential.clarke import clarke_bounds, j0_values
from numerics.potential.pieces import PiecewisePotential

logger = logging.getLogger(__name__)


class Verdict(str, Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass
class HypothesisAudit:
    hypothesis: str
    verdict: Verdict
    witnesses: list[dict[str, Any]] = field(default_factory=list)
    parameters: dict[str, Any] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return self.verdict is Verdict.FAIL

    def to_dict(self) -> dict[str, Any]:
        return {
            "hypothesis": self.hypothesis,
            "verdict": self.verdict.value,
            "witnesses": self.witnesses,
            "parameters": self.parameters,
            "notes": self.notes,
        }


@dataclass(frozen=True)
class AuditSettings:
    """Overrides for audit constants; None falls back to potential metadata."""
    mu_claim: float | None = None
    tang_c: float | None = None
    nu: float | None = None
    M: float | None = None
    growth_t_max: float = GROWTH_T_MAX
    superlinear_t_max: float = SUPERLINEAR_T_MAX
    tang_t_range: tuple[float, float] = TANG_T_RANGE
    shells: tuple[int, ...] = NEAR_ZERO_SHELLS
    points_per_shell: int = POINTS_PER_SHELL
    tol: float = AUDIT_TOL


# ===== Sampling helpers =====

@dataclass(frozen=True)
class _XSample:
    coords: list[float]
    px_j: float | None
    p: float


def _x_samples(j: PiecewisePotential, p: ExponentField, count: int = X_SAMPLES) -> list[_XSample]:
    """Nodes spread over the grid, always including argmin/argmax of p."""
    if j.exponent is not None:
        p.grid.check_same(j.exponent.grid, "potential exponent")
    n = p.grid.n_nodes
    picks = set(np.linspace(0, n - 1, min(count, n)).round().astype(int).tolist())
    picks |= {int(np.argmin(p.values)), int(np.argmax(p.values))}
    out = []
    for i in sorted(picks):
        out.append(_XSample(
            coords=[float(c) for c in p.grid.coordinates[i]],
            px_j=None if j.exponent is None else float(j.exponent.values[i]),
            p=float(p.values[i]),
        ))
    return out


def _symmetric(t: np.ndarray) -> np.ndarray:
    return np.concatenate([-t[::-1], t])


def _shell_points(decade: float, count: int) -> np.ndarray:
    """count geometric points in (10^(d-1), 10^d]."""
    return 10.0 ** (decade - np.arange(count) / count)


def _witness(x: _XSample, t: float, measured: float, bound: float, **extra: Any) -> dict[str, Any]:
    w = {"x": x.coords, "t": float(t), "measured": float(measured), "bound": float(bound)}
    w.update(extra)
    return w


def _worst(witnesses: list[dict[str, Any]]) -> list[dict[str, Any]]:
    def excess(w: dict[str, Any]) -> float:
        e = w["measured"] - w["bound"]
        return e if math.isfinite(e) else math.inf
    return sorted(witnesses, key=excess, reverse=True)[:MAX_WITNESSES]


def _exceeds(lhs: np.ndarray, rhs: np.ndarray, tol: float) -> np.ndarray:
    """lhs > rhs beyond a tolerance relative to the magnitudes involved."""
    with np.errstate(invalid="ignore"):
        scale = 1.0 + np.maximum(np.abs(lhs), np.abs(rhs))
        bad = ~(lhs <= rhs + tol * scale)
    return bad | (np.isposinf(lhs) & np.isfinite(rhs))


# ===== H(j)(iii) =====

def audit_growth(
    j: PiecewisePotential,
    p: ExponentField,
    samples: np.ndarray | None = None,
    t_max: float = GROWTH_T_MAX,
    tol: float = AUDIT_TOL,
) -> HypothesisAudit:
    """Check |v| <= a + c1 |t|^{r-1} for v in the Clarke interval."""
    meta = j.metadata
    if meta.growth_a is None or meta.growth_c1 is None or meta.growth_r is None:
        raise MetadataError(f"{j.name}: growth audit needs growth_a, growth_c1 and growth_r")
    a, c1, r = meta.growth_a, meta.growth_c1, meta.growth_r

    if samples is None:
        base = np.geomspace(1e-8, t_max, 200)
        t = np.unique(np.concatenate([_symmetric(base), [0.0], np.asarray(j.breakpoints)]))
    else:
        t = np.asarray(samples, dtype=float)

    witnesses = []
    for xs in _x_samples(j, p):
        lo, hi = clarke_bounds(j, t, xs.px_j)
        mag = np.maximum(np.abs(lo), np.abs(hi))
        bound = a + c1 * np.abs(t) ** (r - 1.0)
        bad = _exceeds(mag, bound, tol)
        witnesses += [_witness(xs, t[i], mag[i], bound[i]) for i in np.flatnonzero(bad)]

    return HypothesisAudit(
        hypothesis="Hj_iii",
        verdict=Verdict.FAIL if witnesses else Verdict.PASS,
        witnesses=_worst(witnesses),
        parameters={"a": a, "c1": c1, "r": r, "t_max": float(np.max(np.abs(t))), "samples": int(t.size)},
    )


# ===== H(j)(iv) =====

def _limsup_verdict(shell_bad: list[bool]) -> Verdict:
    """FAIL only when every one of the innermost LIMSUP_TAIL_SHELLS shells violates."""
    tail = shell_bad[-LIMSUP_TAIL_SHELLS:]
    return Verdict.FAIL if tail and all(tail) else Verdict.INCONCLUSIVE


def audit_local_negativity(
    j: PiecewisePotential,
    p: ExponentField,
    mu_claim: float | None = None,
    shells: tuple[int, ...] = NEAR_ZERO_SHELLS,
    points_per_shell: int = POINTS_PER_SHELL,
    tol: float = AUDIT_TOL,
) -> HypothesisAudit:
    """
    Sample j(x,t) / |t|^{p(x)} on shells 10^-1 ... 10^-8 against -mu_claim.

    The hypothesis is a limsup at t = 0, so violations on the outer shells
    say nothing about it (the smooth benchmark violates its own claim there).
    FAIL needs a violation on each of the innermost shells. Witnesses from
    every shell are reported whatever the verdict.
    """
    mu = mu_claim if mu_claim is not None else j.metadata.mu_claim
    if mu is None:
        # weakest positive claim
        mu = DEFAULT_MU_CLAIM
    if mu <= 0:
        raise PotentialError("mu_claim must be positive", mu_claim=mu)

    witnesses: list[dict[str, Any]] = []
    per_shell = []
    for k in shells:
        t = _symmetric(_shell_points(-k, points_per_shell))
        worst = -math.inf
        shell_w = []
        for xs in _x_samples(j, p):
            ratio = j.value(t, xs.px_j) / np.abs(t) ** xs.p
            bad = ratio > -mu + tol
            worst = max(worst, float(np.max(ratio)))
            shell_w += [_witness(xs, t[i], ratio[i], -mu, shell=k) for i in np.flatnonzero(bad)]
        per_shell.append({"shell": k, "worst_ratio": worst, "violations": len(shell_w)})
        witnesses += shell_w

    verdict = _limsup_verdict([s["violations"] > 0 for s in per_shell])
    notes = ["limsup sampled on logarithmic shells; no violation is not a proof"]
    if witnesses and verdict is not Verdict.FAIL:
        outer = [s["shell"] for s in per_shell if s["violations"]]
        notes.append(f"violations on shells {outer} do not cover the innermost {LIMSUP_TAIL_SHELLS} shells")
    return HypothesisAudit(
        hypothesis="Hj_iv",
        verdict=verdict,
        witnesses=_worst(witnesses),
        parameters={"mu_claim": mu, "shells": list(shells), "per_shell": per_shell},
        notes=notes,
    )


# ===== H(j)_1 =====

def audit_tang_condition(
    j: PiecewisePotential,
    p: ExponentField,
    c_claim: float | None = None,
    t_range: tuple[float, float] = TANG_T_RANGE,
    points_per_shell: int = POINTS_PER_SHELL,
    tol: float = AUDIT_TOL,
) -> HypothesisAudit:
    """Worst (v* t - j) / |t|^{p(x)} over the Clarke interval against -c on large-|t| shells."""
    c = c_claim if c_claim is not None else (j.metadata.tang_c or DEFAULT_TANG_C)
    if c <= 0:
        raise PotentialError("c_claim must be positive", c_claim=c)

    lo_dec, hi_dec = int(round(math.log10(t_range[0]))), int(round(math.log10(t_range[1])))
    witnesses: list[dict[str, Any]] = []
    per_shell = []
    for d in range(lo_dec + 1, hi_dec + 1):
        t = _symmetric(_shell_points(d, points_per_shell))
        worst = -math.inf
        shell_w = []
        for xs in _x_samples(j, p):
            lo, hi = clarke_bounds(j, t, xs.px_j)
            jv = j.value(t, xs.px_j)
            with np.errstate(invalid="ignore", over="ignore"):
                q = (np.maximum(lo * t, hi * t) - jv) / np.abs(t) ** xs.p
            bad = ~(q <= -c + tol)
            worst = max(worst, float(np.nanmax(q)) if np.any(np.isfinite(q)) else math.inf)
            shell_w += [_witness(xs, t[i], q[i], -c, shell=d) for i in np.flatnonzero(bad)]
        per_shell.append({"shell": d, "worst_ratio": worst, "violations": len(shell_w)})
        witnesses += shell_w

    verdict = _limsup_verdict([s["violations"] > 0 for s in per_shell])
    return HypothesisAudit(
        hypothesis="Hj1_v",
        verdict=verdict,
        witnesses=_worst(witnesses) if verdict is Verdict.FAIL else [],
        parameters={"c_claim": c, "t_range": list(t_range), "per_shell": per_shell},
        notes=["limsup sampled on logarithmic shells; no violation is not a proof"],
    )


def _default_M(j: PiecewisePotential, M: float | None) -> float:
    if M is not None:
        return float(M)
    if j.metadata.M is not None:
        return j.metadata.M
    if j.breakpoints:
        return max(abs(b) for b in j.breakpoints)
    return DEFAULT_SUPERLINEAR_M


def _beyond(M: float, t_max: float, count: int = 60) -> np.ndarray:
    t_max = t_max if t_max > M else 10.0 * M
    return _symmetric(np.geomspace(M * (1.0 + 1e-6), t_max, count))


def audit_tang_consequence(
    j: PiecewisePotential,
    p: ExponentField,
    M: float | None = None,
    t_max: float = SUPERLINEAR_T_MAX,
    tol: float = AUDIT_TOL,
) -> HypothesisAudit:
    """j(x,t) >= -j0(x,t;-t) for |t| > M."""
    M = _default_M(j, M)
    t = _beyond(M, t_max)
    witnesses = []
    for xs in _x_samples(j, p):
        jv = j.value(t, xs.px_j)
        neg = -j0_values(j, t, -t, xs.px_j)
        bad = _exceeds(neg, jv, tol)
        witnesses += [_witness(xs, t[i], jv[i], neg[i]) for i in np.flatnonzero(bad)]
    return HypothesisAudit(
        hypothesis="Hj1_consequence",
        verdict=Verdict.FAIL if witnesses else Verdict.PASS,
        witnesses=_worst(witnesses),
        parameters={"M": M, "t_max": float(np.max(t))},
    )


def audit_far_point(
    j: PiecewisePotential,
    u_bar: GridFunction,
    lam: float,
    p: ExponentField,
    tol: float = AUDIT_TOL,
) -> HypothesisAudit:
    """
    (1/p-) int |grad u|^p + (lam_-/p-) int |u|^p <= int j(x, u) at u = u_bar,
    plus the stronger norm form with c_bar = max{1/p-, lam_-/p-}.
    """
    u_bar.grid.check_same(p.grid, "exponent field")
    if j.exponent is not None:
        u_bar.grid.check_same(j.exponent.grid, "potential exponent")
    if u_bar.is_zero:
        raise PotentialError("far point audit needs u_bar != 0")

    lam_minus = max(0.0, -lam)
    pm, pp = p.p_minus, p.p_plus
    m = u_bar.grid.cell_measure

    def sides(u: GridFunction) -> tuple[float, float]:
        grad_mod = cell_modular(gradient_magnitude(u), p.cell_values, m)
        mod = cell_modular(np.abs(cell_values(u)), p.cell_values, m)
        lhs = grad_mod / pm + lam_minus * mod / pm
        rhs = lumped_integral(u.grid, j.value(u.values, j.nodal_exponent()))
        return lhs, rhs

    lhs, rhs = sides(u_bar)
    holds = lhs <= rhs + tol * (1.0 + abs(lhs))

    norm = sobolev_norm(u_bar, p)
    c_bar = max(1.0 / pm, lam_minus / pm)
    strong_lhs = c_bar * norm ** (pp if norm >= 1.0 else pm)
    strong_holds = strong_lhs <= rhs + tol * (1.0 + abs(strong_lhs))

    samples = []
    for s in FAR_POINT_SCALES:
        l_s, r_s = sides(u_bar.scaled(s))
        samples.append({"scale": s, "lhs": l_s, "rhs": r_s, "holds": l_s <= r_s + tol * (1.0 + abs(l_s))})

    witnesses = [] if holds else [{"x": None, "t": None, "measured": lhs, "bound": rhs}]
    notes = []
    if strong_holds and not holds:
        notes.append("norm form holds while the integral form fails")
    return HypothesisAudit(
        hypothesis="Hj1_vi",
        verdict=Verdict.PASS if holds else Verdict.FAIL,
        witnesses=witnesses,
        parameters={
            "lambda": lam,
            "lhs": lhs,
            "rhs": rhs,
            "norm": norm,
            "c_bar": c_bar,
            "norm_form_lhs": strong_lhs,
            "norm_form_holds": bool(strong_holds),
            "scaling_samples": samples,
        },
        notes=notes,
    )


# ===== H(j)_2 =====

def audit_superlinear(
    j: PiecewisePotential,
    p: ExponentField,
    nu: float | None = None,
    M: float | None = None,
    t_max: float = SUPERLINEAR_T_MAX,
    tol: float = AUDIT_TOL,
) -> HypothesisAudit:
    """
    For |t| > M: nu j <= -j0(t; -t), ess inf j > 0, and the derived bound
    j >= l |t|^nu with l = M^-nu min_x min j(x, +-M).
    """
    nu = nu if nu is not None else (j.metadata.nu if j.metadata.nu is not None else p.p_plus + 1.0)
    if not nu > p.p_plus:
        raise PotentialError("superlinear audit needs nu > p+", nu=nu, p_plus=p.p_plus)
    M = _default_M(j, M)
    t = _beyond(M, t_max)
    xs_all = _x_samples(j, p)

    j_at_M = min(float(np.min(j.value(np.array([-M, M]), xs.px_j))) for xs in xs_all)
    ell = j_at_M * M ** (-nu)

    witnesses = []
    for xs in xs_all:
        jv = j.value(t, xs.px_j)
        neg = -j0_values(j, t, -t, xs.px_j)
        bad1 = _exceeds(nu * jv, neg, tol)
        bad2 = ~(jv > 0.0)
        lower = ell * np.abs(t) ** nu
        bad3 = _exceeds(lower, jv, tol)
        witnesses += [_witness(xs, t[i], nu * jv[i], neg[i], check="nu_j_le_minus_j0") for i in np.flatnonzero(bad1)]
        witnesses += [_witness(xs, t[i], jv[i], 0.0, check="ess_inf_positive") for i in np.flatnonzero(bad2)]
        witnesses += [_witness(xs, t[i], lower[i], jv[i], check="lower_bound_nu") for i in np.flatnonzero(bad3)]

    notes = [] if ell > 0 else ["l is not positive; the lower bound is vacuous"]
    return HypothesisAudit(
        hypothesis="Hj2_v",
        verdict=Verdict.FAIL if witnesses else Verdict.PASS,
        witnesses=_worst(witnesses),
        parameters={"nu": nu, "M": M, "l": ell, "t_max": float(np.max(t))},
        notes=notes,
    )


def audit_scaling_monotonicity(
    j: PiecewisePotential,
    p: ExponentField,
    nu: float | None = None,
    M: float | None = None,
    t_max: float = SUPERLINEAR_T_MAX,
    tol: float = AUDIT_TOL,
) -> HypothesisAudit:
    """k^nu j(x,t) <= j(x, k t) for k > 1 and |t| > M."""
    nu = nu if nu is not None else (j.metadata.nu if j.metadata.nu is not None else p.p_plus + 1.0)
    M = _default_M(j, M)
    t = _beyond(M, t_max)
    witnesses = []
    for xs in _x_samples(j, p):
        jv = j.value(t, xs.px_j)
        for k in SCALING_FACTORS:
            lhs = k**nu * jv
            rhs = j.value(k * t, xs.px_j)
            bad = _exceeds(lhs, rhs, tol)
            witnesses += [_witness(xs, t[i], lhs[i], rhs[i], k=k) for i in np.flatnonzero(bad)]
    return HypothesisAudit(
        hypothesis="Hj2_scaling",
        verdict=Verdict.FAIL if witnesses else Verdict.PASS,
        witnesses=_worst(witnesses),
        parameters={"nu": nu, "M": M, "factors": list(SCALING_FACTORS)},
    )


# ===== Exponent window =====

def audit_exponent_window(j: PiecewisePotential, p: ExponentField, N: int | None = None) -> HypothesisAudit:
    """p+ <= r+ < N p- / (N - p-) for the declared growth exponent."""
    N = p.grid.dimension if N is None else int(N)
    r = j.metadata.growth_r
    p_hat = hat_star(p.p_minus, N)
    params = {"r_plus": r, "p_plus": p.p_plus, "p_hat_star": p_hat, "N": N}
    if r is None:
        return HypothesisAudit("exponent_window", Verdict.INCONCLUSIVE, parameters=params,
                               notes=["no declared growth exponent"])
    holds = p.p_plus <= r < p_hat
    return HypothesisAudit(
        hypothesis="exponent_window",
        verdict=Verdict.PASS if holds else Verdict.FAIL,
        witnesses=[] if holds else [{"x": None, "t": None, "measured": r, "bound": p_hat}],
        parameters=params,
        notes=["reported only; not required by any family"],
    )


# ===== Families =====

@dataclass
class AuditFamilies:
    base: list[HypothesisAudit]
    h1: list[HypothesisAudit]
    h2: list[HypothesisAudit]
    reported: list[HypothesisAudit]
    requested_mode: str
    resolved_mode: str | None
    reason: str | None = None

    @staticmethod
    def _holds(audits: list[HypothesisAudit]) -> bool:
        return not any(a.failed for a in audits)

    @property
    def base_holds(self) -> bool:
        return self._holds(self.base)

    @property
    def h1_holds(self) -> bool:
        return self._holds(self.h1)

    @property
    def h2_holds(self) -> bool:
        return self._holds(self.h2)

    @property
    def all_audits(self) -> list[HypothesisAudit]:
        return self.base + self.h1 + self.h2 + self.reported

    @property
    def required_failed(self) -> bool:
        """True when the hypotheses of the requested theorem do not hold."""
        return self.resolved_mode is None or not self.base_holds

    def to_dict(self) -> dict[str, Any]:
        return {
            "requested_mode": self.requested_mode,
            "resolved_mode": self.resolved_mode,
            "reason": self.reason,
            "base_holds": self.base_holds,
            "H1_holds": self.h1_holds,
            "H2_holds": self.h2_holds,
            "audits": [a.to_dict() for a in self.all_audits],
        }


def run_audit_families(
    j: PiecewisePotential,
    p: ExponentField,
    lam: float,
    settings: AuditSettings | None = None,
    u_bar: GridFunction | None = None,
    mode: str = "auto",
) -> AuditFamilies:
    """
    Run the base, H1 and H2 families and resolve the mode.
    auto needs exactly one of H1 / H2 to hold; an explicit mode needs its own family.
    """
    s = settings or AuditSettings()
    base = [
        audit_growth(j, p, t_max=s.growth_t_max, tol=s.tol),
        audit_local_negativity(j, p, s.mu_claim, s.shells, s.points_per_shell, s.tol),
    ]
    h1 = [
        audit_tang_condition(j, p, s.tang_c, s.tang_t_range, s.points_per_shell, s.tol),
        audit_tang_consequence(j, p, s.M, s.superlinear_t_max, s.tol),
    ]
    if u_bar is not None:
        h1.append(audit_far_point(j, u_bar, lam, p, s.tol))
    else:
        h1.append(HypothesisAudit("Hj1_vi", Verdict.INCONCLUSIVE, notes=["no u_bar supplied"]))

    nu = s.nu if s.nu is not None else (j.metadata.nu if j.metadata.nu is not None else p.p_plus + 1.0)
    if nu > p.p_plus:
        h2 = [
            audit_superlinear(j, p, nu, s.M, s.superlinear_t_max, s.tol),
            audit_scaling_monotonicity(j, p, nu, s.M, s.superlinear_t_max, s.tol),
        ]
    else:
        h2 = [HypothesisAudit("Hj2_v", Verdict.FAIL, parameters={"nu": nu, "p_plus": p.p_plus},
                              notes=["nu must exceed p+"])]
    reported = [audit_exponent_window(j, p)]

    families = AuditFamilies(base, h1, h2, reported, requested_mode=mode, resolved_mode=None)
    if not families.base_holds:
        families.reason = "base hypotheses fail"
    elif mode == "auto":
        if families.h1_holds and not families.h2_holds:
            families.resolved_mode = "H1"
        elif families.h2_holds and not families.h1_holds:
            families.resolved_mode = "H2"
        else:
            families.reason = "ambiguous: both families hold" if families.h1_holds else "neither family holds"
    elif mode in ("H1", "H2"):
        holds = families.h1_holds if mode == "H1" else families.h2_holds
        if holds:
            families.resolved_mode = mode
        else:
            families.reason = f"requested family {mode} fails"
    else:
        raise PotentialError(f"unknown mode {mode!r}")

    logger.info("audit families for %s: resolved=%s reason=%s", j.name, families.resolved_mode, families.reason)
    return families
