"""Potentials j(x, t), their Clarke calculus and hypothesis audits."""
from .pieces import (
    Piece,
    PiecewisePotential,
    PotentialMetadata,
    build_potential,
    make_abs,
    make_exponential,
    make_j1,
    make_j2,
    make_power,
    make_quadratic,
    make_smooth_benchmark,
    make_zero,
)
from .clarke import ClarkeInterval, clarke_bounds, clarke_interval, j0, j0_values
from .audits import (
    AuditFamilies,
    AuditSettings,
    HypothesisAudit,
    Verdict,
    audit_exponent_window,
    audit_far_point,
    audit_growth,
    audit_local_negativity,
    audit_scaling_monotonicity,
    audit_superlinear,
    audit_tang_condition,
    audit_tang_consequence,
    run_audit_families,
)

__all__ = [
    "Piece",
    "PiecewisePotential",
    "PotentialMetadata",
    "build_potential",
    "make_abs",
    "make_exponential",
    "make_j1",
    "make_j2",
    "make_power",
    "make_quadratic",
    "make_smooth_benchmark",
    "make_zero",
    "ClarkeInterval",
    "clarke_bounds",
    "clarke_interval",
    "j0",
    "j0_values",
    "AuditFamilies",
    "AuditSettings",
    "HypothesisAudit",
    "Verdict",
    "audit_exponent_window",
    "audit_far_point",
    "audit_growth",
    "audit_local_negativity",
    "audit_scaling_monotonicity",
    "audit_superlinear",
    "audit_tang_condition",
    "audit_tang_consequence",
    "run_audit_families",
]
