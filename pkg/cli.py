"""
vexp command line.

    vexp norms|audit|lambda-star|solve --config scenario.toml [--seed N] [--out DIR]

Writes summary.json (and solution.csv for `solve`) into the output
directory and exits 0 on success, 1 on configuration / I/O errors,
2 when the requested hypotheses fail, 3 when the solver does not converge.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any

import numpy as np

from config import COMMANDS, SCHEMA_VERSION, SOLUTION_FILE, SUMMARY_FILE
from env_loader import get_default_seed, get_log_level, get_output_dir
from handlers import HANDLERS
from lib.common import to_jsonable
from lib.errors import ConfigError, ErrorCode, exit_code_for
from lib.scenario_config import ScenarioConfig, load_config
from lib.types import SummaryDict
from numerics.exponent_domain import GridFunction

logger = logging.getLogger("vexp")


def configure_logging() -> None:
    """stderr logging at VEXP_LOG_LEVEL; stdout stays free for JSON."""
    logging.basicConfig(
        level=get_log_level(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def execute(config: ScenarioConfig, command: str) -> tuple[dict[str, Any], Any]:
    """Run one scenario command; returns (envelope, handler)."""
    if command not in HANDLERS:
        raise ConfigError(f"unknown command {command!r}; expected one of {', '.join(COMMANDS)}", field="command")
    handler = HANDLERS[command](config)
    return handler.run(), handler


def build_summary(command: str, config: ScenarioConfig, response: dict[str, Any], handler: Any) -> SummaryDict:
    error = response.get("error")
    code = error.get("code") if error else None
    if response.get("ok"):
        data = response.get("data", {})
    else:
        data = {k: v for k, v in error.items() if k not in ("code", "message")}
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": getattr(handler, "seed", config.solver.seed),
        "ok": bool(response.get("ok")),
        "exit_code": exit_code_for(code),
        "error": None if error is None else {"code": code, "message": error.get("message")},
        "thresholds": to_jsonable(getattr(handler, "thresholds", {}) or {}),
        "audits": to_jsonable(getattr(handler, "audits", []) or []),
        "warnings": list(getattr(handler, "warnings", []) or []),
        "scenario": to_jsonable(config.to_dict()),
        "data": to_jsonable(data),
    }


def write_summary(out_dir: Path, summary: SummaryDict) -> Path:
    path = out_dir / SUMMARY_FILE
    text = json.dumps(summary, indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def write_solution(out_dir: Path, u: GridFunction) -> Path:
    """CSV with header x[,y],u and full float precision."""
    path = out_dir / SOLUTION_FILE
    axes = ["x", "y"][: u.grid.dimension]
    table = np.column_stack([u.grid.coordinates, u.values])
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=",".join(axes + ["u"]), comments="")
    return path


def run_scenario(config: ScenarioConfig, command: str) -> int:
    """
    Execute a scenario and write its artifacts.

    Returns:
        Process exit code
    """
    response, handler = execute(config, command)
    summary = build_summary(command, config, response, handler)
    out_dir = Path(config.output_dir) if config.output_dir else (get_output_dir() or Path("."))
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        path = write_summary(out_dir, summary)
        logger.info("wrote %s", path)
        solution = getattr(handler, "solution", None)
        if command == "solve" and solution is not None:
            logger.info("wrote %s", write_solution(out_dir, solution))
    except OSError as e:
        logger.error("cannot write artifacts to %s: %s", out_dir, e)
        return exit_code_for(ErrorCode.IO_ERROR)
    if not response.get("ok"):
        logger.warning("%s: %s", response["error"]["code"], response["error"]["message"])
    return summary["exit_code"]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vexp", description="p(x)-Laplacian hemivariational toolkit")
    p.add_argument("command", choices=COMMANDS, help="scenario to run")
    p.add_argument("--config", required=True, help="scenario TOML file")
    p.add_argument("--seed", type=int, default=None, help="override solver.seed")
    p.add_argument("--out", default=None, help="output directory (default: output.dir, VEXP_OUT_DIR or .)")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()
    try:
        config = load_config(args.config)
    except ConfigError as e:
        where = f" (line {e.line})" if e.line else (f" ({e.field})" if e.field else "")
        print(f"ERROR: {e.message}{where}", file=sys.stderr)
        return exit_code_for(e.code)
    seed = args.seed
    if seed is None and config.solver.seed is None:
        seed = get_default_seed()
    return run_scenario(config.with_overrides(seed=seed, output_dir=args.out), args.command)


if __name__ == "__main__":
    raise SystemExit(main())
