"""
Pytest configuration and fixtures for vexp tests.

Numeric fixtures are deliberately small (tens of nodes) so the whole suite
runs in seconds; acceptance-size runs are marked `slow`.
"""
import os
import textwrap

import numpy as np
import pytest

from numerics.energy import EnergyModel
from numerics.exponent_domain import ExponentField, GridFunction, build_grid
from numerics.potential import make_j1, make_j2, make_smooth_benchmark, make_zero

# Keep the suite independent of a developer's .env
os.environ.pop("VEXP_SEED", None)
os.environ.pop("VEXP_OUT_DIR", None)


# ========== Response Assertion Helpers ==========

class ResponseAssertions:
    """Helper class for asserting API response structures."""

    @staticmethod
    def assert_success(response: dict, op: str | None = None) -> dict:
        """Assert response is successful and return data.

        Args:
            response: The response dict to check
            op: Optional operation name to verify

        Returns:
            The data dict from the response
        """
        assert response.get("ok") is True, f"Expected success, got: {response}"
        if op:
            assert response.get("op") == op, f"Expected op={op}, got {response.get('op')}"
        return response.get("data", {})

    @staticmethod
    def assert_error(response: dict, code: str, op: str | None = None) -> dict:
        """Assert response is an error with given code.

        Args:
            response: The response dict to check
            code: Expected error code
            op: Optional operation name to verify

        Returns:
            The error dict from the response
        """
        assert response.get("ok") is False, f"Expected error, got success: {response}"
        assert response.get("error", {}).get("code") == code, \
            f"Expected error code {code}, got {response.get('error', {}).get('code')}"
        if op:
            assert response.get("op") == op, f"Expected op={op}, got {response.get('op')}"
        return response.get("error", {})


@pytest.fixture
def assertions():
    """Fixture providing response assertion helpers."""
    return ResponseAssertions()


# ========== Grids and exponents ==========

@pytest.fixture
def grid_1d():
    """Unit interval, 65 nodes."""
    return build_grid(1, (0.0, 1.0), 65)


@pytest.fixture
def grid_2d():
    """Unit square, 9 x 9 nodes."""
    return build_grid(2, ((0.0, 1.0), (0.0, 1.0)), 9)


@pytest.fixture
def p_const2(grid_1d):
    return ExponentField.constant(grid_1d, 2.0)


@pytest.fixture
def p_linear(grid_1d):
    """p(x) = 2 + x on [0, 1]: p- = 2, p+ = 3."""
    return ExponentField.from_preset(grid_1d, "linear(2,1)")


@pytest.fixture
def sin_bump(grid_1d):
    return GridFunction.from_preset(grid_1d, "sin(1)")


@pytest.fixture
def random_functions():
    """
    Builder for seeded batches of zero-trace grid functions whose amplitudes
    spread over four decades, so both sides of the unit sphere are covered.
    """
    def build(grid, count: int, seed: int) -> list[GridFunction]:
        rng = np.random.default_rng(seed)
        values = rng.standard_normal((count, grid.interior.size))
        values *= 10.0 ** rng.uniform(-2.0, 2.0, size=(count, 1))
        return [GridFunction.from_interior(grid, row) for row in values]
    return build


# ========== Potentials and models ==========

@pytest.fixture
def j1_potential(p_const2):
    return make_j1(1.0, 40.0, p_const2, 4.0)


@pytest.fixture
def j2_potential(p_const2):
    return make_j2(1.0, p_const2, 4.0)


@pytest.fixture
def benchmark_model(p_const2):
    """Smooth benchmark -u'' + u = u^3 on (0, 1) with zero boundary values."""
    return EnergyModel(p_const2.grid, p_const2, 0.0, make_smooth_benchmark(1.0))


@pytest.fixture
def j2_model(p_const2, j2_potential):
    return EnergyModel(p_const2.grid, p_const2, 0.0, j2_potential)


@pytest.fixture
def zero_model(p_const2):
    return EnergyModel(p_const2.grid, p_const2, 0.0, make_zero())


# ========== Scenario documents ==========

_BASE_SCENARIO = """
[grid]
dimension = 1
bounds = [0.0, 1.0]
nodes = 33

[exponent]
preset = "constant(2)"

[potential]
preset = "j2"
mu = 1.0
q_plus = 4.0

[problem]
lambda = 0.0
mode = "auto"

[solver]
max_iters = 400
restarts = 1
"""


@pytest.fixture
def scenario_text():
    """
    Build a scenario TOML document.

    Call with no arguments for a small j2 scenario, or pass extra TOML
    that replaces whole tables, e.g. scenario_text(potential='preset = "zero"').
    """
    def build(**tables: str) -> str:
        sections: dict[str, str] = {}
        current = None
        for line in _BASE_SCENARIO.strip().splitlines():
            if line.startswith("["):
                current = line.strip("[]")
                sections[current] = ""
            elif current:
                sections[current] += line + "\n"
        for name, body in tables.items():
            sections[name] = textwrap.dedent(body).strip() + "\n"
        return "\n".join(f"[{name}]\n{body}" for name, body in sections.items() if body is not None)

    return build


@pytest.fixture
def scenario_file(tmp_path, scenario_text):
    """Write a scenario document to tmp_path and return its path."""
    def write(**tables: str):
        path = tmp_path / "scenario.toml"
        path.write_text(scenario_text(**tables), encoding="utf-8")
        return path

    return write
