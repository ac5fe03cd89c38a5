"""
Scenario files.

A scenario is a TOML document with the tables [grid], [exponent],
[potential], [problem], [solver], [audit], [tolerances] and [output].
Every key is optional except grid.nodes, exponent.preset and
potential.preset. Unknown tables or keys are rejected with their dotted path.

Example:
    [grid]
    dimension = 1
    bounds = [0.0, 1.0]
    nodes = 129

    [exponent]
    preset = "constant(2)"

    [potential]
    preset = "j2"
    mu = 1.0
    q_plus = 4.0

    [problem]
    lambda = 0.0
    mode = "auto"
"""
from __future__ import annotations

import re
import tomllib
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

from config import (
    AUDIT_TOL,
    DEFAULT_MAX_ITERS,
    DEFAULT_PATH_NODES,
    DEFAULT_RHO_GRID,
    DEFAULT_SAMPLES_PER_SPHERE,
    DEFAULT_T_MAX,
    DEFAULT_TOL,
    EXPONENT_PRESETS,
    FUNCTION_PRESETS,
    GROWTH_T_MAX,
    LAMBDA_STAR_RESTARTS,
    NEWTON_MAX_ITERS,
    PATH_SWITCH_TOL,
    POTENTIAL_PRESETS,
    SUPERLINEAR_T_MAX,
    TANG_T_RANGE,
)
from lib.common import normalize
from lib.errors import ConfigError
from lib.input_parser import coerce_bool, coerce_float, coerce_int, coerce_str, parse_preset

MODES = ("auto", "H1", "H2")
POTENTIAL_PARAMS = (
    "mu", "sigma", "q_plus", "coef", "nu", "K",
    "growth_a", "growth_c1", "growth_r", "mu_claim", "M", "tang_c",
)
_LINE_RE = re.compile(r"line (\d+)")


@dataclass(frozen=True)
class GridSpec:
    dimension: int = 1
    bounds: tuple[tuple[float, float], ...] = ((0.0, 1.0),)
    nodes: tuple[int, ...] = (129,)


@dataclass(frozen=True)
class ProblemSpec:
    lam: float = 0.0
    mode: str = "auto"
    u_bar: str | None = None
    u0: str = "sin(1)"
    function: str = "sin(1)"


@dataclass(frozen=True)
class SolverSpec:
    path_nodes: int = DEFAULT_PATH_NODES
    max_iters: int = DEFAULT_MAX_ITERS
    tol: float = DEFAULT_TOL
    restarts: int = LAMBDA_STAR_RESTARTS
    seed: int | None = None
    rho_grid: tuple[float, ...] = DEFAULT_RHO_GRID
    samples_per_sphere: int = DEFAULT_SAMPLES_PER_SPHERE
    t_max: float = DEFAULT_T_MAX
    switch_tol: float = PATH_SWITCH_TOL
    newton_max_iters: int = NEWTON_MAX_ITERS
    poincare: bool = False


@dataclass(frozen=True)
class AuditSpec:
    mu_claim: float | None = None
    tang_c: float | None = None
    nu: float | None = None
    M: float | None = None
    growth_t_max: float = GROWTH_T_MAX
    superlinear_t_max: float = SUPERLINEAR_T_MAX
    tang_t_range: tuple[float, float] = TANG_T_RANGE


@dataclass(frozen=True)
class ToleranceSpec:
    audit: float = AUDIT_TOL
    lemma: float = 1e-8
    certify: float = DEFAULT_TOL


@dataclass(frozen=True)
class ScenarioConfig:
    grid: GridSpec
    exponent: str
    potential: str
    potential_params: dict[str, float] = field(default_factory=dict)
    problem: ProblemSpec = field(default_factory=ProblemSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    audit: AuditSpec = field(default_factory=AuditSpec)
    tolerances: ToleranceSpec = field(default_factory=ToleranceSpec)
    output_dir: str | None = None

    def with_overrides(self, seed: int | None = None, output_dir: str | None = None) -> "ScenarioConfig":
        """CLI overrides: --seed replaces solver.seed, --out replaces output.dir."""
        solver = self.solver if seed is None else replace(self.solver, seed=int(seed))
        return replace(self, solver=solver, output_dir=output_dir if output_dir is not None else self.output_dir)

    def to_dict(self) -> dict[str, Any]:
        return {
            "grid": {
                "dimension": self.grid.dimension,
                "bounds": [list(b) for b in self.grid.bounds],
                "nodes": list(self.grid.nodes),
            },
            "exponent": {"preset": self.exponent},
            "potential": {"preset": self.potential, **self.potential_params},
            "problem": {
                "lambda": self.problem.lam,
                "mode": self.problem.mode,
                "u_bar": self.problem.u_bar,
                "u0": self.problem.u0,
                "function": self.problem.function,
            },
            "solver": {**asdict(self.solver), "rho_grid": list(self.solver.rho_grid)},
        }


# ===== Field readers =====

class _Table:
    """Typed reads from one TOML table; `finish` rejects keys outside the schema."""

    def __init__(self, data: Any, path: str) -> None:
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"[{path}] must be a table", field=path)
        self.data = data
        self.path = path

    def _field(self, key: str) -> str:
        return f"{self.path}.{key}"

    def raw(self, key: str) -> Any:
        return self.data.get(key)

    def number(self, key: str, default: float | None) -> float | None:
        v = self.raw(key)
        if v is None:
            return default
        out = coerce_float(v)
        if out is None:
            raise ConfigError(f"{self._field(key)} must be a number", field=self._field(key))
        return out

    def positive(self, key: str, default: float) -> float:
        v = self.number(key, default)
        if v is None or v <= 0.0:
            raise ConfigError(f"{self._field(key)} must be positive", field=self._field(key))
        return v

    def integer(self, key: str, default: int | None, minimum: int | None = None) -> int | None:
        v = self.raw(key)
        if v is None:
            return default
        out = coerce_int(v) if not isinstance(v, float) else None
        if out is None:
            raise ConfigError(f"{self._field(key)} must be an integer", field=self._field(key))
        if minimum is not None and out < minimum:
            raise ConfigError(f"{self._field(key)} must be >= {minimum}", field=self._field(key))
        return out

    def text(self, key: str, default: str | None) -> str | None:
        v = self.raw(key)
        if v is None:
            return default
        out = coerce_str(v)
        if out is None:
            raise ConfigError(f"{self._field(key)} must be a string", field=self._field(key))
        return out

    def flag(self, key: str, default: bool) -> bool:
        v = self.raw(key)
        if v is None:
            return default
        out = coerce_bool(v)
        if out is None:
            raise ConfigError(f"{self._field(key)} must be a boolean", field=self._field(key))
        return out

    def float_list(self, key: str, default: tuple[float, ...]) -> tuple[float, ...]:
        v = self.raw(key)
        if v is None:
            return default
        if not isinstance(v, list) or not v:
            raise ConfigError(f"{self._field(key)} must be a non-empty list", field=self._field(key))
        out = [coerce_float(x) for x in v]
        if any(x is None for x in out):
            raise ConfigError(f"{self._field(key)} must contain numbers", field=self._field(key))
        return tuple(out)

    def finish(self, allowed: tuple[str, ...]) -> None:
        for key in self.data:
            if key not in allowed:
                raise ConfigError(f"unknown key {self._field(key)}", field=self._field(key))


def _preset(
    table: _Table, key: str, default: str | None, names: tuple[str, ...], required: bool = False,
) -> str | None:
    path = f"{table.path}.{key}"
    value = table.text(key, default)
    if value is None:
        if required:
            raise ConfigError(f"{path} is required", field=path)
        return None
    try:
        name, _ = parse_preset(value)
    except ConfigError as e:
        raise ConfigError(e.message, field=path) from e
    if name not in names:
        raise ConfigError(f"unknown preset {name!r} (expected one of {', '.join(names)})", field=path)
    return value


def _grid(table: _Table) -> GridSpec:
    dim = table.integer("dimension", 1)
    if dim not in (1, 2):
        raise ConfigError("grid.dimension must be 1 or 2", field="grid.dimension")
    raw_bounds = table.raw("bounds")
    if raw_bounds is None:
        bounds = tuple((0.0, 1.0) for _ in range(dim))
    else:
        pairs = raw_bounds if raw_bounds and isinstance(raw_bounds[0], list) else [raw_bounds]
        try:
            bounds = tuple((float(lo), float(hi)) for lo, hi in pairs)
        except (TypeError, ValueError) as e:
            raise ConfigError("grid.bounds must be [lo, hi] pairs", field="grid.bounds") from e
        if len(bounds) != dim:
            raise ConfigError(f"grid.bounds needs {dim} pair(s)", field="grid.bounds")
    raw_nodes = table.raw("nodes")
    if raw_nodes is None:
        raise ConfigError("grid.nodes is required", field="grid.nodes")
    counts = raw_nodes if isinstance(raw_nodes, list) else [raw_nodes] * dim
    if len(counts) != dim or any(isinstance(n, bool) or not isinstance(n, int) for n in counts):
        raise ConfigError(f"grid.nodes must be an integer or {dim} integers", field="grid.nodes")
    table.finish(("dimension", "bounds", "nodes"))
    return GridSpec(dimension=dim, bounds=bounds, nodes=tuple(counts))


def _potential(table: _Table) -> tuple[str, dict[str, float]]:
    preset = table.text("preset", None)
    if preset is None:
        raise ConfigError("potential.preset is required", field="potential.preset")
    preset = normalize(preset)
    if preset not in POTENTIAL_PRESETS:
        raise ConfigError(f"unknown potential preset {preset!r}", field="potential.preset")
    params = {}
    for key in POTENTIAL_PARAMS:
        v = table.number(key, None)
        if v is not None:
            params[key] = v
    table.finish(("preset",) + POTENTIAL_PARAMS)
    return preset, params


def _problem(table: _Table) -> ProblemSpec:
    mode = table.text("mode", "auto")
    if mode not in MODES:
        raise ConfigError(f"problem.mode must be one of {', '.join(MODES)}", field="problem.mode")
    spec = ProblemSpec(
        lam=table.number("lambda", 0.0),
        mode=mode,
        u_bar=_preset(table, "u_bar", None, FUNCTION_PRESETS),
        u0=_preset(table, "u0", "sin(1)", FUNCTION_PRESETS),
        function=_preset(table, "function", "sin(1)", FUNCTION_PRESETS),
    )
    table.finish(("lambda", "mode", "u_bar", "u0", "function"))
    return spec


def _solver(table: _Table) -> SolverSpec:
    rho_grid = table.float_list("rho_grid", DEFAULT_RHO_GRID)
    if any(not 0.0 < r < 1.0 for r in rho_grid):
        raise ConfigError("solver.rho_grid values must lie in (0, 1)", field="solver.rho_grid")
    spec = SolverSpec(
        path_nodes=table.integer("path_nodes", DEFAULT_PATH_NODES, minimum=3),
        max_iters=table.integer("max_iters", DEFAULT_MAX_ITERS, minimum=1),
        tol=table.positive("tol", DEFAULT_TOL),
        restarts=table.integer("restarts", LAMBDA_STAR_RESTARTS, minimum=1),
        seed=table.integer("seed", None),
        rho_grid=rho_grid,
        samples_per_sphere=table.integer("samples_per_sphere", DEFAULT_SAMPLES_PER_SPHERE, minimum=2),
        t_max=table.positive("t_max", DEFAULT_T_MAX),
        switch_tol=table.positive("switch_tol", PATH_SWITCH_TOL),
        newton_max_iters=table.integer("newton_max_iters", NEWTON_MAX_ITERS, minimum=1),
        poincare=table.flag("poincare", False),
    )
    table.finish(tuple(SolverSpec.__dataclass_fields__))
    return spec


def _audit(table: _Table) -> AuditSpec:
    t_range = table.float_list("tang_t_range", TANG_T_RANGE)
    if len(t_range) != 2 or not 0.0 < t_range[0] < t_range[1]:
        raise ConfigError("audit.tang_t_range must be [lo, hi] with 0 < lo < hi", field="audit.tang_t_range")
    spec = AuditSpec(
        mu_claim=table.number("mu_claim", None),
        tang_c=table.number("tang_c", None),
        nu=table.number("nu", None),
        M=table.number("M", None),
        growth_t_max=table.positive("growth_t_max", GROWTH_T_MAX),
        superlinear_t_max=table.positive("superlinear_t_max", SUPERLINEAR_T_MAX),
        tang_t_range=(t_range[0], t_range[1]),
    )
    table.finish(tuple(AuditSpec.__dataclass_fields__))
    return spec


def _tolerances(table: _Table) -> ToleranceSpec:
    spec = ToleranceSpec(
        audit=table.positive("audit", AUDIT_TOL),
        lemma=table.positive("lemma", 1e-8),
        certify=table.positive("certify", DEFAULT_TOL),
    )
    table.finish(tuple(ToleranceSpec.__dataclass_fields__))
    return spec


_TABLES = ("grid", "exponent", "potential", "problem", "solver", "audit", "tolerances", "output")


def parse_config(text: str) -> ScenarioConfig:
    """
    Parse and validate a scenario document.

    Raises:
        ConfigError: TOML syntax error (with line), unknown table or key,
            missing required field, or a value of the wrong type or range
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        m = _LINE_RE.search(str(e))
        raise ConfigError(f"invalid TOML: {e}", line=int(m.group(1)) if m else None) from e

    for name in doc:
        if name not in _TABLES:
            raise ConfigError(f"unknown key {name}", field=name)

    grid = _grid(_Table(doc.get("grid"), "grid"))

    exp_table = _Table(doc.get("exponent"), "exponent")
    exponent = _preset(exp_table, "preset", None, EXPONENT_PRESETS, required=True)
    exp_table.finish(("preset",))

    potential, params = _potential(_Table(doc.get("potential"), "potential"))
    problem = _problem(_Table(doc.get("problem"), "problem"))
    solver = _solver(_Table(doc.get("solver"), "solver"))
    audit = _audit(_Table(doc.get("audit"), "audit"))
    tolerances = _tolerances(_Table(doc.get("tolerances"), "tolerances"))

    out_table = _Table(doc.get("output"), "output")
    output_dir = out_table.text("dir", None)
    out_table.finish(("dir",))

    return ScenarioConfig(
        grid=grid,
        exponent=exponent,
        potential=potential,
        potential_params=params,
        problem=problem,
        solver=solver,
        audit=audit,
        tolerances=tolerances,
        output_dir=output_dir,
    )


def load_config(path: str | Path) -> ScenarioConfig:
    """Read and parse a scenario file."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read scenario file {path}: {e}") from e
    return parse_config(text)
