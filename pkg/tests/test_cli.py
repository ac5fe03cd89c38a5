"""
Tests for cli.py: artifacts, exit codes and seed precedence.
"""
import json

import numpy as np
import pytest

from cli import build_parser, main

BENCHMARK = 'preset = "benchmark"'


def run(command, config_path, out_dir, *extra):
    return main([command, "--config", str(config_path), "--out", str(out_dir), *extra])


def read_summary(out_dir):
    return json.loads((out_dir / "summary.json").read_text(encoding="utf-8"))


class TestParser:
    """Tests for build_parser"""

    def test_commands(self):
        args = build_parser().parse_args(["lambda-star", "--config", "s.toml", "--seed", "4"])
        assert args.command == "lambda-star"
        assert args.seed == 4
        assert args.out is None

    def test_unknown_command(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["plot", "--config", "s.toml"])

    def test_config_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["norms"])


class TestExitCodes:
    """Tests for exit codes 0 / 1 / 2 / 3"""

    def test_norms_ok(self, scenario_file, tmp_path):
        out = tmp_path / "out"
        assert run("norms", scenario_file(), out) == 0
        summary = read_summary(out)
        assert summary["ok"] is True
        assert summary["exit_code"] == 0
        assert summary["error"] is None
        assert summary["command"] == "norms"
        assert not (out / "solution.csv").exists()

    def test_missing_config(self, tmp_path, capsys):
        assert run("norms", tmp_path / "missing.toml", tmp_path / "out") == 1
        assert "ERROR" in capsys.readouterr().err
        assert not (tmp_path / "out").exists()

    def test_unknown_key_reports_field(self, scenario_file, tmp_path, capsys):
        assert run("norms", scenario_file(solver="max_iter = 3"), tmp_path / "out") == 1
        assert "solver.max_iter" in capsys.readouterr().err

    def test_bad_grid_writes_summary(self, scenario_file, tmp_path):
        out = tmp_path / "out"
        assert run("norms", scenario_file(grid="nodes = 2"), out) == 1
        assert read_summary(out)["error"]["code"] == "BAD_GRID"

    def test_audit_failed(self, scenario_file, tmp_path):
        out = tmp_path / "out"
        assert run("audit", scenario_file(potential='preset = "zero"'), out) == 2
        summary = read_summary(out)
        assert summary["error"]["code"] == "AUDIT_FAILED"
        assert summary["audits"]
        assert "lambda_star" in summary["thresholds"]

    def test_geometry_not_found(self, scenario_file, tmp_path):
        out = tmp_path / "out"
        assert run("solve", scenario_file(potential=BENCHMARK, problem="lambda = 30.0"), out) == 3
        assert read_summary(out)["error"]["code"] == "GEOMETRY_NOT_FOUND"

    def test_not_converged_still_writes_solution(self, scenario_file, tmp_path):
        out = tmp_path / "out"
        path = scenario_file(potential=BENCHMARK, solver="max_iters = 1\nnewton_max_iters = 1\ntol = 1e-15")
        assert run("solve", path, out) == 3
        assert read_summary(out)["error"]["code"] == "NOT_CONVERGED"
        assert (out / "solution.csv").exists()

    def test_unwritable_output(self, scenario_file, tmp_path):
        blocker = tmp_path / "taken"
        blocker.write_text("x", encoding="utf-8")
        assert run("norms", scenario_file(), blocker) == 1


class TestSolveArtifacts:
    """Tests for summary.json and solution.csv of a converged j2 solve"""

    @pytest.fixture
    def solved(self, scenario_file, tmp_path):
        out = tmp_path / "solve"
        assert run("solve", scenario_file(), out) == 0
        return out

    def test_summary(self, solved):
        summary = read_summary(solved)
        assert summary["schema_version"] == 1
        assert summary["seed"] == 0
        assert summary["data"]["result"]["converged"] is True
        assert summary["data"]["result"]["max_gap"] <= 1e-6
        assert summary["scenario"]["potential"]["preset"] == "j2"
        assert summary["thresholds"]["tilde_p"] == 1.0

    def test_solution_csv(self, solved):
        lines = (solved / "solution.csv").read_text(encoding="utf-8").splitlines()
        assert lines[0] == "x,u"
        table = np.loadtxt(solved / "solution.csv", delimiter=",", skiprows=1)
        assert table.shape == (33, 2)
        assert table[0, 1] == 0.0 and table[-1, 1] == 0.0
        assert table[:, 1].max() == pytest.approx(1.894603, abs=1e-4)

    def test_deterministic(self, solved, scenario_file, tmp_path):
        again = tmp_path / "again"
        assert run("solve", scenario_file(), again) == 0
        for name in ("summary.json", "solution.csv"):
            assert (again / name).read_bytes() == (solved / name).read_bytes()


class TestSeedPrecedence:
    """CLI --seed, then solver.seed, then VEXP_SEED, then 0"""

    def test_cli_overrides_file(self, scenario_file, tmp_path):
        out = tmp_path / "out"
        run("norms", scenario_file(solver="seed = 3"), out, "--seed", "11")
        assert read_summary(out)["seed"] == 11

    def test_file_overrides_env(self, scenario_file, tmp_path, monkeypatch):
        monkeypatch.setenv("VEXP_SEED", "5")
        out = tmp_path / "out"
        run("norms", scenario_file(solver="seed = 3"), out)
        assert read_summary(out)["seed"] == 3

    def test_env_default(self, scenario_file, tmp_path, monkeypatch):
        monkeypatch.setenv("VEXP_SEED", "5")
        out = tmp_path / "out"
        run("norms", scenario_file(), out)
        assert read_summary(out)["seed"] == 5

    def test_out_dir_from_env(self, scenario_file, tmp_path, monkeypatch):
        target = tmp_path / "env_out"
        monkeypatch.setenv("VEXP_OUT_DIR", str(target))
        assert main(["norms", "--config", str(scenario_file())]) == 0
        assert (target / "summary.json").exists()
