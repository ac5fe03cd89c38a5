"""
vexp MCP Server

Exposes the four scenario commands as MCP tools over stdio. Each tool takes
the scenario TOML text and returns the same summary the CLI writes to
summary.json (no files are written).
"""
import logging
import sys
from typing import Any

from mcp.server.fastmcp import FastMCP

from cli import build_summary, execute
from env_loader import get_log_level
from lib.errors import ConfigError, bad_request, from_exception
from lib.input_parser import coerce_int, coerce_str
from lib.scenario_config import ScenarioConfig, parse_config

mcp = FastMCP("vexp")


def log(*a):
    print(*a, file=sys.stderr, flush=True)


def _load(op: str, scenario: Any, seed: Any) -> ScenarioConfig | dict:
    text = coerce_str(scenario, ("scenario", "config", "toml"))
    if not text:
        return bad_request(op, "scenario (TOML text) is required")
    try:
        config = parse_config(text)
    except ConfigError as e:
        return from_exception(op, e)
    return config.with_overrides(seed=coerce_int(seed))


def _run(command: str, scenario: Any, seed: Any) -> dict:
    loaded = _load(command, scenario, seed)
    if isinstance(loaded, dict):
        return loaded
    response, handler = execute(loaded, command)
    summary = build_summary(command, loaded, response, handler)
    if response.get("ok"):
        return {"ok": True, "op": command, "data": summary}
    return {**response, "summary": summary}


# ===== Scenario Tools =====

@mcp.tool()
async def norms(scenario: Any, seed: int | None = None) -> dict:
    """関数のモジュラー・Luxemburg ノルム・Sobolev ノルムと補題チェックを返します。

    引数:
    - scenario: シナリオ TOML テキスト（必須）。[problem] function で対象関数を指定。
    - seed: 乱数シード（任意、solver.seed を上書き）

    使い方（例）:
    - norms({"scenario": "[grid]\\nnodes = 65\\n[exponent]\\npreset = \\"linear(2,1)\\"\\n[potential]\\npreset = \\"zero\\""})

    返り値（例）:
    {
      "ok": true,
      "op": "norms",
      "data": {
        "schema_version": 1,
        "data": {"norms": {"modular": …, "luxemburg": …, "phi": …, "sobolev": …}, "lemmas": {…}}
      }
    }
    """
    return _run("norms", scenario, seed)


@mcp.tool()
async def audit(scenario: Any, seed: int | None = None) -> dict:
    """ポテンシャル j の仮定 (H(j), H(j)1, H(j)2) を標本検査し、モードを判定します。

    引数:
    - scenario: シナリオ TOML テキスト（必須）
    - seed: 乱数シード（任意）

    返り値:
    - 成功: data.data.families に各監査の判定 (PASS/FAIL/INCONCLUSIVE) と resolved_mode
    - 失敗: error.code = "AUDIT_FAILED"、summary に監査結果一式
    """
    return _run("audit", scenario, seed)


@mcp.tool()
async def lambda_star(scenario: Any, seed: int | None = None) -> dict:
    """λ* の離散推定値と閾値 (tilde_p·λ*, (p⁻/p⁺)·λ*) を返します。

    引数:
    - scenario: シナリオ TOML テキスト（必須）。[solver] restarts で再始動回数。
    - seed: 乱数シード（任意）

    返り値（例）:
    { "ok": true, "op": "lambda-star", "data": { "thresholds": {"lambda_star": 9.87, …} } }
    """
    return _run("lambda-star", scenario, seed)


@mcp.tool()
async def solve(scenario: Any, seed: int | None = None) -> dict:
    """山越え法（minimax 経路変形 + Newton 仕上げ）で非自明解を求めます。

    引数:
    - scenario: シナリオ TOML テキスト（必須）
    - seed: 乱数シード（任意）

    返り値:
    - 成功: data.data.result に c_estimate, m_estimate, rho, eta, converged, iterations, seed
    - 失敗: AUDIT_FAILED / GEOMETRY_NOT_FOUND / FAR_POINT_NOT_FOUND / NOT_CONVERGED
    """
    return _run("solve", scenario, seed)


# ===== Utility Tools =====

@mcp.tool()
async def tools_help() -> dict:
    """このMCPで公開中のツール一覧と使い方を返します。"""
    tools = [
        {"name": "norms", "desc": "ノルム・モジュラーと補題チェック", "args": {"scenario": "string", "seed": "int"}},
        {"name": "audit", "desc": "ポテンシャル仮定の監査とモード判定", "args": {"scenario": "string", "seed": "int"}},
        {"name": "lambda_star", "desc": "λ* と λ 閾値の推定", "args": {"scenario": "string", "seed": "int"}},
        {"name": "solve", "desc": "山越え法による解の計算と検証", "args": {"scenario": "string", "seed": "int"}},
    ]
    return {"ok": True, "op": "tools.help", "data": {"tools": tools}}


# ===== Server Entry Point =====

if __name__ == "__main__":
    logging.basicConfig(level=get_log_level(), stream=sys.stderr)
    log("Starting vexp MCP server (stdio)")
    mcp.run()
