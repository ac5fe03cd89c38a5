"""
Tests for numerics/mountain_pass.py.

The smooth benchmark -u'' + u = u^3 on (0, 1) is checked against an
independent discrete oracle: the three-point scheme written as a shooting
recurrence, with the initial slope found by brentq.
"""
import math

import numpy as np
import pytest
from scipy.optimize import brentq

from lib.errors import FarPointNotFoundError, GeometryNotFoundError, VexpError
from numerics.discrete_operator import stiffness_matrix
from numerics.energy import EnergyModel, eval_R, m_estimate
from numerics.exponent_domain import ExponentField, GridFunction, build_grid
from numerics.mountain_pass import (
    GeometryCertificate,
    Path,
    certify_solution,
    find_far_point,
    minimax_solve,
    ray_derivative,
    ray_maximum,
    refine_critical_point,
    sample_sphere_directions,
    verify_geometry,
)
from numerics.modular_spaces import sobolev_norm
from numerics.potential import make_j1, make_j2, make_quadratic, make_smooth_benchmark


def shooting_solution(n_nodes: int) -> np.ndarray:
    """
    Positive solution of (2u_k - u_{k-1} - u_{k+1}) / h^2 = u_k^3 - u_k with
    u_0 = u_N = 0, as nodal values on [0, 1].
    """
    h = 1.0 / (n_nodes - 1)

    def shoot(s: float) -> np.ndarray:
        u = np.zeros(n_nodes)
        u[1] = s
        for k in range(1, n_nodes - 1):
            u[k + 1] = 2 * u[k] - u[k - 1] - h * h * (u[k] ** 3 - u[k])
        return u

    def end(s: float) -> float:
        return float(shoot(s)[-1])

    grid_s = np.arange(1, 400) * 2.5e-3
    prev = end(grid_s[0])
    for a, b in zip(grid_s[:-1], grid_s[1:]):
        cur = end(b)
        if prev > 0.0 >= cur:
            return shoot(brentq(end, a, b, xtol=1e-15, rtol=1e-15))
        prev = cur
    raise AssertionError("shooting found no sign change")


def benchmark_on(n_nodes: int) -> EnergyModel:
    grid = build_grid(1, (0.0, 1.0), n_nodes)
    p = ExponentField.constant(grid, 2.0)
    return EnergyModel(grid, p, 0.0, make_smooth_benchmark(1.0))


def j2_on(n_nodes: int) -> EnergyModel:
    grid = build_grid(1, (0.0, 1.0), n_nodes)
    p = ExponentField.constant(grid, 2.0)
    return EnergyModel(grid, p, 0.0, make_j2(1.0, p, 4.0))


def j2_far_point(model: EnergyModel) -> GridFunction:
    return find_far_point(model, GridFunction.from_preset(model.grid, "sin(1)"))


class TestShootingOracle:
    """Sanity checks of the oracle itself"""

    def test_oracle_is_positive_single_bump(self):
        u = shooting_solution(65)
        assert u[0] == 0.0 and abs(u[-1]) < 1e-9
        assert np.all(u[1:-1] > 0.0)
        assert 3.0 < u.max() < 5.0

    def test_oracle_is_discrete_critical_point(self, benchmark_model, grid_1d):
        u = shooting_solution(65)
        u[-1] = 0.0
        assert m_estimate(benchmark_model, GridFunction(grid_1d, u)) < 1e-8


class TestGeometry:
    """Tests for sphere sampling and verify_geometry"""

    def test_direction_count_and_determinism(self, benchmark_model):
        a = sample_sphere_directions(benchmark_model, 12, seed=5)
        b = sample_sphere_directions(benchmark_model, 12, seed=5)
        assert len(a) == 12
        assert all(np.array_equal(x.values, y.values) for x, y in zip(a, b))
        assert np.allclose(a[1].values, -a[0].values)

    def test_directions_need_two(self, benchmark_model):
        with pytest.raises(VexpError):
            sample_sphere_directions(benchmark_model, 1)

    def test_benchmark_has_positive_eta(self, benchmark_model):
        cert = verify_geometry(benchmark_model)
        assert cert.eta > 0.0
        assert 0.0 < cert.rho < 1.0
        assert len(cert.per_rho) == 7
        assert cert.R_far is None and not cert.validates

    def test_large_quadratic_has_no_geometry(self, p_const2):
        """j = 10 t^2 exceeds lambda_1 / 2, so R < 0 along the first eigenvector."""
        model = EnergyModel(p_const2.grid, p_const2, 0.0, make_quadratic(10.0))
        with pytest.raises(GeometryNotFoundError):
            verify_geometry(model)

    def test_rho_outside_unit_ball(self, benchmark_model):
        with pytest.raises(VexpError):
            verify_geometry(benchmark_model, rho_grid=(0.5, 1.5))

    def test_certificate_validates_with_far_point(self):
        cert = GeometryCertificate(rho=0.3, eta=0.1)
        assert cert.with_far_point(-2.0).validates
        assert not cert.with_far_point(0.5).validates


class TestFarPoint:
    """Tests for find_far_point"""

    def test_ray_scan_doubles_until_negative(self, benchmark_model, sin_bump):
        u_bar = find_far_point(benchmark_model, sin_bump)
        assert np.allclose(u_bar.values, 8.0 * sin_bump.values)
        assert eval_R(benchmark_model, u_bar) <= 0.0

    def test_ray_scan_respects_t_max(self, benchmark_model, sin_bump):
        with pytest.raises(FarPointNotFoundError):
            find_far_point(benchmark_model, sin_bump, t_max=4.0)

    def test_zero_potential_never_turns_negative(self, zero_model, sin_bump):
        with pytest.raises(FarPointNotFoundError):
            find_far_point(zero_model, sin_bump)

    def test_zero_direction(self, benchmark_model, grid_1d):
        with pytest.raises(FarPointNotFoundError):
            find_far_point(benchmark_model, GridFunction.zero(grid_1d))

    def test_h1_needs_u_bar(self, benchmark_model, sin_bump):
        with pytest.raises(FarPointNotFoundError, match="u_bar"):
            find_far_point(benchmark_model, sin_bump, mode="H1")

    def test_h1_accepts_audited_plateau(self, p_const2, grid_1d):
        model = EnergyModel(p_const2.grid, p_const2, 0.0, make_j1(1.0, 200.0, p_const2, 4.0))
        plateau = GridFunction.from_preset(grid_1d, "plateau(2,0.8)")
        assert find_far_point(model, None, mode="H1", u_bar=plateau) is plateau

    def test_h1_rejects_failing_u_bar(self, p_const2, j1_potential, grid_1d):
        model = EnergyModel(p_const2.grid, p_const2, 0.0, j1_potential)
        with pytest.raises(FarPointNotFoundError):
            find_far_point(model, None, mode="H1", u_bar=GridFunction.from_preset(grid_1d, "sin(0.5)"))


class TestPath:
    """Tests for Path"""

    def test_straight(self, sin_bump):
        path = Path.straight(sin_bump, 5)
        assert path.tau.tolist() == [0.0, 0.25, 0.5, 0.75, 1.0]
        assert path.start.is_zero
        assert path.end is sin_bump
        assert np.allclose(path.nodes[2].values, 0.5 * sin_bump.values)

    def test_too_short(self, sin_bump):
        with pytest.raises(VexpError):
            Path.straight(sin_bump, 2)

    def test_must_start_at_zero(self, sin_bump):
        with pytest.raises(VexpError):
            Path([sin_bump, sin_bump, sin_bump], np.linspace(0.0, 1.0, 3))


class TestRayMaximum:
    """Tests for ray_derivative and ray_maximum"""

    def test_benchmark_closed_form(self, benchmark_model, sin_bump):
        """R(t w) = t^2 (a + b) / 2 - t^4 c / 4 peaks at t^2 = (a + b) / c."""
        x = sin_bump.interior_values
        w = benchmark_model.weights
        a = float(x @ (stiffness_matrix(benchmark_model.grid) @ x))
        b, c = float(np.sum(w * x**2)), float(np.sum(w * x**4))
        top = ray_maximum(benchmark_model, sin_bump)
        t_star = math.sqrt((a + b) / c)
        assert np.allclose(top.values, t_star * sin_bump.values, rtol=1e-12, atol=0.0)
        assert ray_derivative(benchmark_model, sin_bump, t_star) == pytest.approx(0.0, abs=1e-9)

    def test_is_maximum_along_ray(self, j2_model, sin_bump):
        top = ray_maximum(j2_model, sin_bump)
        peak = eval_R(j2_model, top)
        for factor in (0.9, 0.99, 1.01, 1.1):
            assert eval_R(j2_model, top.scaled(factor)) < peak

    def test_scale_invariant(self, j2_model, sin_bump):
        a = ray_maximum(j2_model, sin_bump)
        b = ray_maximum(j2_model, sin_bump.scaled(5.0))
        assert np.allclose(a.values, b.values, rtol=1e-12, atol=1e-14)

    def test_zero_potential_has_no_maximum(self, zero_model, sin_bump):
        assert ray_maximum(zero_model, sin_bump) is None

    def test_zero_direction(self, benchmark_model, grid_1d):
        assert ray_maximum(benchmark_model, GridFunction.zero(grid_1d)) is None


class TestRefine:
    """Tests for refine_critical_point"""

    def test_newton_from_perturbed_solution(self, benchmark_model, grid_1d):
        exact = GridFunction(grid_1d, np.where(grid_1d.boundary_mask, 0.0, shooting_solution(65)))
        u, report, ok, iterations = refine_critical_point(benchmark_model, exact.scaled(0.9), tol=1e-10)
        assert ok
        assert iterations > 0
        assert np.max(np.abs(u.values - exact.values)) < 1e-7
        assert report.m_estimate <= 1e-10


class TestMinimax:
    """Tests for minimax_solve"""

    @pytest.fixture
    def solved(self, benchmark_model, sin_bump):
        u_bar = find_far_point(benchmark_model, sin_bump)
        return minimax_solve(benchmark_model, u_bar, max_iters=400, seed=0)

    def test_benchmark_matches_oracle(self, solved):
        assert solved.converged, solved.reasons
        assert solved.refined
        oracle = shooting_solution(65)
        assert np.max(np.abs(solved.u_candidate.values - oracle)) <= 1e-4
        assert solved.m_estimate <= 1e-6

    def test_critical_value_above_eta(self, solved):
        assert solved.critical_value >= solved.geometry.eta - 1e-6
        assert solved.c_estimate >= solved.geometry.eta - 1e-6
        assert solved.geometry.validates

    def test_path_history_non_increasing(self, solved):
        h = np.asarray(solved.path_history)
        assert h.size >= 1
        assert np.all(np.diff(h) <= 1e-12)

    def test_deterministic(self, benchmark_model, sin_bump, solved):
        again = minimax_solve(benchmark_model, find_far_point(benchmark_model, sin_bump), max_iters=400, seed=0)
        assert np.array_equal(again.u_candidate.values, solved.u_candidate.values)
        assert again.path_history == solved.path_history

    def test_to_dict(self, solved):
        d = solved.to_dict()
        assert d["converged"] is True
        assert d["seed"] == 0
        assert set(d) >= {"c_estimate", "critical_value", "m_estimate", "rho", "eta", "path_history"}

    def test_needs_three_path_nodes(self, benchmark_model, sin_bump):
        with pytest.raises(VexpError):
            minimax_solve(benchmark_model, sin_bump.scaled(8.0), path_nodes=2)

    def test_switch_exit_is_not_a_cap(self, benchmark_model, sin_bump):
        u_bar = find_far_point(benchmark_model, sin_bump)
        result = minimax_solve(benchmark_model, u_bar, max_iters=1, switch_tol=1e9)
        assert result.iterations == 1
        assert "minimax iteration cap reached" not in result.reasons

    def test_exhausted_loop_reports_cap(self, benchmark_model, sin_bump):
        u_bar = find_far_point(benchmark_model, sin_bump)
        result = minimax_solve(benchmark_model, u_bar, max_iters=1, switch_tol=0.0, newton_max_iters=1, tol=1e-15)
        assert "minimax iteration cap reached" in result.reasons
        assert not result.converged

    def test_h1_mode_keeps_straight_path_maximum(self, benchmark_model, sin_bump):
        u_bar = find_far_point(benchmark_model, sin_bump)
        straight = max(eval_R(benchmark_model, u) for u in Path.straight(u_bar, 17).nodes[1:-1])
        plain = minimax_solve(benchmark_model, u_bar, max_iters=0, mode="H1")
        lifted = minimax_solve(benchmark_model, u_bar, max_iters=0)
        assert plain.path_history == [straight]
        assert lifted.path_history[0] >= straight

    @pytest.mark.slow
    def test_benchmark_129_nodes(self):
        model = benchmark_on(129)
        u0 = GridFunction.from_preset(model.grid, "sin(1)")
        result = minimax_solve(model, find_far_point(model, u0))
        assert result.converged, result.reasons
        assert result.m_estimate <= 1e-6
        assert np.max(np.abs(result.u_candidate.values - shooting_solution(129))) <= 1e-4


class TestMinimaxJ2:
    """
    j2 (mu = 1, q+ = 4, p = 2, lambda = 0) on 33 nodes: nonsmooth at |t| = 1,
    with the regular solution crossing the breakpoint on both sides.
    """

    @pytest.fixture(scope="class")
    def model(self):
        return j2_on(33)

    @pytest.fixture(scope="class")
    def solved(self, model):
        return minimax_solve(model, j2_far_point(model), max_iters=400, seed=0)

    def test_converges(self, solved):
        assert solved.converged, solved.reasons
        assert solved.refined
        assert solved.max_gap <= 1e-6
        assert solved.m_estimate <= 1e-6

    def test_mountain_pass_level(self, model, solved):
        assert solved.critical_value >= solved.geometry.eta - 1e-6
        assert solved.critical_value > 0.0
        assert solved.geometry.validates
        assert sobolev_norm(solved.u_candidate, model.p) >= solved.geometry.rho / 2.0

    def test_known_discrete_solution(self, solved):
        assert solved.critical_value == pytest.approx(5.3180294, abs=1e-5)
        assert solved.u_candidate.values.max() == pytest.approx(1.894603, abs=1e-4)
        assert np.all(solved.u_candidate.interior_values > 0.0)

    def test_path_history_non_increasing(self, solved):
        h = np.asarray(solved.path_history)
        assert np.all(np.diff(h) <= 1e-12)
        assert h[-1] >= solved.geometry.eta

    def test_certificate_passes(self, model, solved):
        cert = certify_solution(model, solved.u_candidate)
        assert cert["verdict"] == "pass"
        assert not cert["trivial"]

    def test_newton_recovers_from_scaled_solution(self, model, solved):
        u, report, ok, _ = refine_critical_point(model, solved.u_candidate.scaled(0.99))
        assert ok
        assert report.max_gap <= 1e-6
        assert np.max(np.abs(u.values - solved.u_candidate.values)) < 1e-5

    def test_deterministic(self, model, solved):
        again = minimax_solve(model, j2_far_point(model), max_iters=400, seed=0)
        assert np.array_equal(again.u_candidate.values, solved.u_candidate.values)
        assert again.path_history == solved.path_history

    @pytest.mark.slow
    @pytest.mark.parametrize("n_nodes", [65, 129])
    def test_refinement(self, n_nodes):
        model = j2_on(n_nodes)
        result = minimax_solve(model, j2_far_point(model), max_iters=400)
        assert result.converged, result.reasons
        assert result.max_gap <= 1e-6
        assert result.critical_value == pytest.approx(5.3, abs=0.1)


class TestCertify:
    """Tests for certify_solution"""

    def test_passes_at_solution(self, benchmark_model, grid_1d):
        u = GridFunction(grid_1d, np.where(grid_1d.boundary_mask, 0.0, shooting_solution(65)))
        cert = certify_solution(benchmark_model, u)
        assert cert["verdict"] == "pass"
        assert not cert["trivial"]

    def test_fails_away_from_solution(self, benchmark_model, sin_bump):
        assert certify_solution(benchmark_model, sin_bump)["verdict"] == "fail"

    def test_zero_is_trivial(self, benchmark_model, grid_1d):
        cert = certify_solution(benchmark_model, GridFunction.zero(grid_1d))
        assert cert["verdict"] == "pass"
        assert cert["trivial"]

    def test_non_zero_trace_fails(self, benchmark_model, grid_1d):
        values = np.where(grid_1d.boundary_mask, 1.0, 0.0)
        cert = certify_solution(benchmark_model, GridFunction(grid_1d, values, zero_trace=False))
        assert cert["verdict"] == "fail"
        assert not cert["boundary_zero"]

    def test_tolerance(self, benchmark_model, sin_bump):
        gap = certify_solution(benchmark_model, sin_bump)["max_gap"]
        assert certify_solution(benchmark_model, sin_bump, tol=math.ceil(gap) + 1.0)["verdict"] == "pass"
