"""
Tests for the MCP tools in server.py.
Each tool takes scenario TOML text and returns the summary envelope.
"""
import pytest

from server import audit, lambda_star, norms, solve, tools_help


class TestNormsTool:
    """Tests for the norms tool"""

    @pytest.mark.asyncio
    async def test_norms_success(self, scenario_text, assertions):
        """Should return the summary with norms data"""
        summary = assertions.assert_success(await norms(scenario=scenario_text()), "norms")
        assert summary["schema_version"] == 1
        assert summary["command"] == "norms"
        assert summary["exit_code"] == 0
        assert "norms" in summary["data"]

    @pytest.mark.asyncio
    async def test_norms_requires_scenario(self, assertions):
        """Should return BAD_REQUEST when scenario is missing"""
        assertions.assert_error(await norms(scenario=None), "BAD_REQUEST", "norms")

    @pytest.mark.asyncio
    async def test_norms_empty_scenario(self, assertions):
        assertions.assert_error(await norms(scenario=""), "BAD_REQUEST")

    @pytest.mark.asyncio
    async def test_norms_with_dict_input(self, scenario_text, assertions):
        """Should accept dict with scenario key"""
        assertions.assert_success(await norms(scenario={"scenario": scenario_text()}))

    @pytest.mark.asyncio
    async def test_norms_bad_config(self, assertions):
        """Should report BAD_CONFIG with the offending field"""
        error = assertions.assert_error(await norms(scenario="[grid]\nnodes = 9\nnodez = 3\n"), "BAD_CONFIG")
        assert error["field"] == "grid.nodez"

    @pytest.mark.asyncio
    async def test_seed_is_recorded(self, scenario_text, assertions):
        summary = assertions.assert_success(await norms(scenario=scenario_text(), seed=42))
        assert summary["seed"] == 42

    @pytest.mark.asyncio
    async def test_seed_as_string(self, scenario_text, assertions):
        summary = assertions.assert_success(await norms(scenario=scenario_text(), seed="7"))
        assert summary["seed"] == 7


class TestAuditTool:
    """Tests for the audit tool"""

    @pytest.mark.asyncio
    async def test_audit_success(self, scenario_text, assertions):
        summary = assertions.assert_success(await audit(scenario=scenario_text()), "audit")
        assert summary["data"]["families"]["resolved_mode"] == "H2"
        assert summary["audits"]

    @pytest.mark.asyncio
    async def test_audit_failure_carries_summary(self, scenario_text, assertions):
        """Should return AUDIT_FAILED and the summary with exit code 2"""
        result = await audit(scenario=scenario_text(potential='preset = "zero"'))
        assertions.assert_error(result, "AUDIT_FAILED", "audit")
        assert result["summary"]["exit_code"] == 2
        assert result["summary"]["audits"]


class TestLambdaStarTool:
    """Tests for the lambda_star tool"""

    @pytest.mark.asyncio
    async def test_lambda_star_success(self, scenario_text, assertions):
        summary = assertions.assert_success(await lambda_star(scenario=scenario_text()), "lambda-star")
        assert summary["thresholds"]["lambda_star"] == pytest.approx(summary["data"]["linear_eigenvalue"], rel=1e-6)


class TestSolveTool:
    """Tests for the solve tool"""

    @pytest.mark.asyncio
    async def test_solve_benchmark(self, scenario_text, assertions):
        summary = assertions.assert_success(await solve(scenario=scenario_text(potential='preset = "benchmark"')), "solve")
        assert summary["data"]["result"]["converged"] is True
        assert summary["data"]["certificate"]["verdict"] == "pass"

    @pytest.mark.asyncio
    async def test_solve_geometry_failure(self, scenario_text, assertions):
        result = await solve(scenario=scenario_text(potential='preset = "benchmark"', problem="lambda = 30.0"))
        assertions.assert_error(result, "GEOMETRY_NOT_FOUND", "solve")
        assert result["summary"]["exit_code"] == 3


class TestToolsHelp:
    """Tests for tools_help"""

    @pytest.mark.asyncio
    async def test_lists_tools(self, assertions):
        data = assertions.assert_success(await tools_help(), "tools.help")
        assert [t["name"] for t in data["tools"]] == ["norms", "audit", "lambda_star", "solve"]
