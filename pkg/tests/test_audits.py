"""
Tests for numerics/potential/audits.py: sampled hypothesis audits and the
mode resolution of the audit families.
"""
from dataclasses import replace

import pytest

from lib.errors import MetadataError, PotentialError
from numerics.exponent_domain import GridFunction
from numerics.potential import (
    AuditSettings,
    Piece,
    PiecewisePotential,
    PotentialMetadata,
    Verdict,
    audit_exponent_window,
    audit_far_point,
    audit_growth,
    audit_local_negativity,
    audit_scaling_monotonicity,
    audit_superlinear,
    audit_tang_condition,
    audit_tang_consequence,
    make_exponential,
    make_j1,
    make_quadratic,
    make_smooth_benchmark,
    make_zero,
    run_audit_families,
)


def sign_switch(inner: float, outer: float, at: float = 2e-5) -> PiecewisePotential:
    """inner * t^2 for |t| <= at, outer * t^2 beyond."""
    def part(c: float) -> Piece:
        return Piece(value=lambda t, px: c * t**2, slope=lambda t, px: 2.0 * c * t)
    return PiecewisePotential("sign_switch", (-at, at), (part(outer), part(inner), part(outer)))


@pytest.fixture
def far_j1(p_const2):
    """j1 with a large sigma so a plateau of height 2 is a far point."""
    return make_j1(1.0, 200.0, p_const2, 4.0)


@pytest.fixture
def plateau(grid_1d):
    return GridFunction.from_preset(grid_1d, "plateau(2,0.8)")


class TestGrowth:
    """Tests for audit_growth"""

    def test_j1_passes(self, j1_potential, p_const2):
        audit = audit_growth(j1_potential, p_const2)
        assert audit.verdict is Verdict.PASS
        assert audit.parameters["r"] == 4.0

    def test_exponential_fails_with_witnesses(self, p_const2):
        audit = audit_growth(make_exponential(), p_const2)
        assert audit.verdict is Verdict.FAIL
        assert 0 < len(audit.witnesses) <= 10
        w = audit.witnesses[0]
        assert w["measured"] > w["bound"]

    def test_missing_metadata(self, p_const2):
        j = replace(make_smooth_benchmark(1.0), metadata=PotentialMetadata())
        with pytest.raises(MetadataError):
            audit_growth(j, p_const2)

    def test_custom_samples(self, j2_potential, p_const2):
        audit = audit_growth(j2_potential, p_const2, samples=[-1.0, 0.0, 1.0])
        assert audit.parameters["samples"] == 3


class TestLocalNegativity:
    """Tests for audit_local_negativity (a limsup: never PASS)"""

    def test_j2_inconclusive(self, j2_potential, p_const2):
        audit = audit_local_negativity(j2_potential, p_const2)
        assert audit.verdict is Verdict.INCONCLUSIVE
        assert audit.witnesses == []

    def test_zero_potential_fails(self, p_const2):
        audit = audit_local_negativity(make_zero(), p_const2)
        assert audit.verdict is Verdict.FAIL
        assert all(s["violations"] > 0 for s in audit.parameters["per_shell"])

    def test_positive_quadratic_fails(self, p_const2):
        assert audit_local_negativity(make_quadratic(1.0), p_const2).verdict is Verdict.FAIL

    def test_claim_too_strong_fails(self, j2_potential, p_const2):
        """j2 has ratio -mu = -1 near 0; claiming mu = 2 is violated on every shell."""
        assert audit_local_negativity(j2_potential, p_const2, mu_claim=2.0).verdict is Verdict.FAIL

    def test_outer_violations_keep_witnesses(self, p_const2):
        """-t^2 below |t| = 2e-5 and +t^2 above: the limsup holds, the outer shells do not."""
        j = sign_switch(-1.0, 1.0)
        audit = audit_local_negativity(j, p_const2, mu_claim=0.5)
        assert audit.verdict is Verdict.INCONCLUSIVE
        counts = [s["violations"] for s in audit.parameters["per_shell"]]
        assert all(c > 0 for c in counts[:4])
        assert counts[4:] == [0, 0, 0, 0]
        assert audit.witnesses
        assert all(w["shell"] <= 4 for w in audit.witnesses)
        assert any("do not cover" in n for n in audit.notes)

    def test_inner_violations_fail_with_witnesses(self, p_const2):
        j = sign_switch(1.0, -1.0)
        audit = audit_local_negativity(j, p_const2, mu_claim=0.5)
        assert audit.verdict is Verdict.FAIL
        assert audit.witnesses
        assert all(s["violations"] > 0 for s in audit.parameters["per_shell"][-3:])

    def test_benchmark_outer_shells_do_not_fail(self, p_const2):
        audit = audit_local_negativity(make_smooth_benchmark(1.0), p_const2)
        assert audit.verdict is Verdict.INCONCLUSIVE
        assert audit.witnesses

    def test_nonpositive_claim_rejected(self, j2_potential, p_const2):
        with pytest.raises(PotentialError):
            audit_local_negativity(j2_potential, p_const2, mu_claim=0.0)


class TestH1Audits:
    """Tests for the H1 family"""

    def test_tang_j1_inconclusive(self, j1_potential, p_const2):
        assert audit_tang_condition(j1_potential, p_const2).verdict is Verdict.INCONCLUSIVE

    def test_tang_j2_fails(self, j2_potential, p_const2):
        audit = audit_tang_condition(j2_potential, p_const2)
        assert audit.verdict is Verdict.FAIL
        assert audit.witnesses

    def test_consequence_j1_passes(self, j1_potential, p_const2):
        assert audit_tang_consequence(j1_potential, p_const2).verdict is Verdict.PASS

    def test_far_point_passes_for_tall_plateau(self, far_j1, plateau, p_const2):
        audit = audit_far_point(far_j1, plateau, 0.0, p_const2)
        assert audit.verdict is Verdict.PASS
        assert audit.parameters["lhs"] <= audit.parameters["rhs"]
        assert len(audit.parameters["scaling_samples"]) == 4

    def test_far_point_fails_for_small_sigma(self, j1_potential, grid_1d, p_const2):
        u = GridFunction.from_preset(grid_1d, "sin(0.5)")
        audit = audit_far_point(j1_potential, u, 0.0, p_const2)
        assert audit.verdict is Verdict.FAIL

    def test_far_point_rejects_zero(self, far_j1, grid_1d, p_const2):
        with pytest.raises(PotentialError):
            audit_far_point(far_j1, GridFunction.zero(grid_1d), 0.0, p_const2)


class TestH2Audits:
    """Tests for the H2 family"""

    def test_superlinear_j2_passes(self, j2_potential, p_const2):
        audit = audit_superlinear(j2_potential, p_const2)
        assert audit.verdict is Verdict.PASS
        assert audit.parameters["nu"] == 3.0
        assert audit.parameters["l"] > 0.0

    def test_superlinear_j1_fails(self, j1_potential, p_const2):
        audit = audit_superlinear(j1_potential, p_const2)
        assert audit.verdict is Verdict.FAIL
        assert audit.witnesses
        assert all(w["check"] in ("nu_j_le_minus_j0", "ess_inf_positive", "lower_bound_nu") for w in audit.witnesses)

    def test_superlinear_needs_nu_above_p_plus(self, j2_potential, p_const2):
        with pytest.raises(PotentialError):
            audit_superlinear(j2_potential, p_const2, nu=2.0)

    def test_scaling_benchmark_passes(self, p_const2):
        assert audit_scaling_monotonicity(make_smooth_benchmark(1.0), p_const2).verdict is Verdict.PASS

    def test_scaling_fails_for_too_large_nu(self, j2_potential, p_const2):
        assert audit_scaling_monotonicity(j2_potential, p_const2, nu=6.0).verdict is Verdict.FAIL


class TestExponentWindow:
    """Tests for audit_exponent_window (reported only)"""

    def test_1d_window_is_open_above(self, j2_potential, p_const2):
        """N = 1 <= p- makes p_hat_star infinite, so r+ = 4 fits."""
        assert audit_exponent_window(j2_potential, p_const2).verdict is Verdict.PASS

    def test_no_growth_exponent(self, p_const2):
        j = replace(make_smooth_benchmark(1.0), metadata=PotentialMetadata())
        assert audit_exponent_window(j, p_const2).verdict is Verdict.INCONCLUSIVE


class TestFamilies:
    """Tests for run_audit_families and mode resolution"""

    def test_j1_resolves_to_h1(self, j1_potential, p_const2):
        families = run_audit_families(j1_potential, p_const2, 0.0)
        assert families.resolved_mode == "H1"
        assert not families.required_failed

    def test_j2_resolves_to_h2(self, j2_potential, p_const2):
        families = run_audit_families(j2_potential, p_const2, 0.0)
        assert families.resolved_mode == "H2"
        assert families.to_dict()["H1_holds"] is False

    def test_benchmark_resolves_to_h2(self, p_const2):
        assert run_audit_families(make_smooth_benchmark(1.0), p_const2, 0.0).resolved_mode == "H2"

    def test_zero_fails_base(self, p_const2):
        families = run_audit_families(make_zero(), p_const2, 0.0)
        assert families.required_failed
        assert families.reason == "base hypotheses fail"

    def test_explicit_mode_must_hold(self, j2_potential, p_const2):
        families = run_audit_families(j2_potential, p_const2, 0.0, mode="H1")
        assert families.resolved_mode is None
        assert families.reason == "requested family H1 fails"

    def test_far_point_joins_h1(self, far_j1, plateau, p_const2):
        families = run_audit_families(far_j1, p_const2, 0.0, u_bar=plateau, mode="H1")
        assert families.resolved_mode == "H1"
        assert [a.hypothesis for a in families.h1][-1] == "Hj1_vi"
        assert families.h1[-1].verdict is Verdict.PASS

    def test_settings_override(self, j2_potential, p_const2):
        families = run_audit_families(j2_potential, p_const2, 0.0, settings=AuditSettings(mu_claim=2.0))
        assert families.required_failed

    def test_unknown_mode(self, j2_potential, p_const2):
        with pytest.raises(PotentialError):
            run_audit_families(j2_potential, p_const2, 0.0, mode="H3")

    def test_limsup_audits_never_pass(self, j1_potential, j2_potential, p_const2):
        for j in (j1_potential, j2_potential):
            for audit in run_audit_families(j, p_const2, 0.0).all_audits:
                if audit.hypothesis in ("Hj_iv", "Hj1_v"):
                    assert audit.verdict is not Verdict.PASS
