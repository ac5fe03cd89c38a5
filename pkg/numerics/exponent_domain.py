"""
Domains, meshes and variable exponent fields.

A `Grid` is a uniform tensor mesh of a 1D interval or a 2D axis-aligned
rectangle. Nodes are numbered with the first axis slowest (C order on the
`nodes_per_axis` shape). Cells are the mesh intervals / rectangles; every
cell-level quadrature in the package is the one-point midpoint rule.

`ExponentField` samples a continuous p(x) at the nodes; `GridFunction` holds
nodal values of u, optionally flagged as an element of the zero-trace space.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import RegularGridInterpolator

from config import MIN_NODES_PER_AXIS, SUPPORTED_DIMENSIONS
from lib.errors import ExponentError, GridError, GridMismatchError, NonFiniteError
from lib.input_parser import parse_preset


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """
    Uniform tensor grid with boundary mask.

    Attributes:
        dimension: 1 or 2
        bounds: per-axis (lo, hi)
        nodes_per_axis: node counts per axis (each >= 3)
    """
    dimension: int
    bounds: tuple[tuple[float, float], ...]
    nodes_per_axis: tuple[int, ...]

    @property
    def key(self) -> tuple:
        """Hashable identity used for grid compatibility checks."""
        return (self.dimension, self.bounds, self.nodes_per_axis)

    def same_as(self, other: "Grid") -> bool:
        return self is other or self.key == other.key

    @cached_property
    def spacing(self) -> tuple[float, ...]:
        return tuple((hi - lo) / (n - 1) for (lo, hi), n in zip(self.bounds, self.nodes_per_axis))

    @cached_property
    def cell_measure(self) -> float:
        return float(math.prod(self.spacing))

    @cached_property
    def measure(self) -> float:
        """|Omega|."""
        return float(math.prod(hi - lo for lo, hi in self.bounds))

    @property
    def n_nodes(self) -> int:
        return int(math.prod(self.nodes_per_axis))

    @property
    def n_cells(self) -> int:
        return int(math.prod(n - 1 for n in self.nodes_per_axis))

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(
            _frozen(np.linspace(lo, hi, n)) for (lo, hi), n in zip(self.bounds, self.nodes_per_axis)
        )

    @cached_property
    def coordinates(self) -> np.ndarray:
        """Node coordinates, shape (n_nodes, dimension)."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return _frozen(np.stack([m.ravel() for m in mesh], axis=1))

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.nodes_per_axis, dtype=bool)
        for axis in range(self.dimension):
            index = [slice(None)] * self.dimension
            index[axis] = 0
            mask[tuple(index)] = True
            index[axis] = -1
            mask[tuple(index)] = True
        return _frozen(mask.ravel())

    @cached_property
    def interior(self) -> np.ndarray:
        """Indices of interior nodes (the unknowns of zero-trace problems)."""
        return _frozen(np.flatnonzero(~self.boundary_mask))

    @cached_property
    def cell_corners(self) -> np.ndarray:
        """Corner node indices per cell, shape (n_cells, 2**dimension)."""
        ids = np.arange(self.n_nodes).reshape(self.nodes_per_axis)
        if self.dimension == 1:
            return _frozen(np.stack([ids[:-1], ids[1:]], axis=1))
        c00 = ids[:-1, :-1].ravel()
        c10 = ids[1:, :-1].ravel()
        c01 = ids[:-1, 1:].ravel()
        c11 = ids[1:, 1:].ravel()
        return _frozen(np.stack([c00, c10, c01, c11], axis=1))

    @cached_property
    def cell_midpoints(self) -> np.ndarray:
        return _frozen(self.midpoint_operator @ self.coordinates)

    @cached_property
    def midpoint_operator(self) -> sp.csr_matrix:
        """P: nodal values -> multilinear interpolant at cell midpoints."""
        corners = self.cell_corners
        k = corners.shape[1]
        rows = np.repeat(np.arange(self.n_cells), k)
        data = np.full(rows.size, 1.0 / k)
        return sp.csr_matrix((data, (rows, corners.ravel())), shape=(self.n_cells, self.n_nodes))

    @cached_property
    def gradient_operators(self) -> tuple[sp.csr_matrix, ...]:
        """D_a: nodal values -> a-th gradient component at cell midpoints."""
        corners = self.cell_corners
        rows = np.repeat(np.arange(self.n_cells), corners.shape[1])
        ops = []
        if self.dimension == 1:
            (h,) = self.spacing
            coeff = np.array([-1.0, 1.0]) / h
            data = np.tile(coeff, self.n_cells)
            ops.append(sp.csr_matrix((data, (rows, corners.ravel())), shape=(self.n_cells, self.n_nodes)))
        else:
            hx, hy = self.spacing
            # corner order: c00, c10, c01, c11
            for coeff in (np.array([-1.0, 1.0, -1.0, 1.0]) / (2 * hx),
                          np.array([-1.0, -1.0, 1.0, 1.0]) / (2 * hy)):
                data = np.tile(coeff, self.n_cells)
                ops.append(sp.csr_matrix((data, (rows, corners.ravel())), shape=(self.n_cells, self.n_nodes)))
        return tuple(ops)

    @cached_property
    def nodal_weights(self) -> np.ndarray:
        """Lumped quadrature weights (each cell shares its measure among its corners)."""
        corners = self.cell_corners
        w = np.zeros(self.n_nodes)
        np.add.at(w, corners.ravel(), self.cell_measure / corners.shape[1])
        return _frozen(w)

    def check_same(self, other: "Grid", what: str = "operand") -> None:
        if not self.same_as(other):
            raise GridMismatchError(f"{what} lives on a different grid", expected=list(self.key), got=list(other.key))


def build_grid(
    dimension: int,
    bounds: Sequence[float] | Sequence[Sequence[float]],
    nodes_per_axis: int | Sequence[int],
) -> Grid:
    """
    Build a uniform tensor grid with boundary mask.

    Args:
        dimension: 1 or 2
        bounds: (lo, hi) for 1D or ((lo, hi), (lo, hi)) for 2D
        nodes_per_axis: int (1D, or same count on every axis) or per-axis counts

    Raises:
        GridError: degenerate bounds, too few nodes, unsupported dimension
    """
    if dimension not in SUPPORTED_DIMENSIONS:
        raise GridError(f"unsupported dimension {dimension}")

    raw_bounds = list(bounds)
    if raw_bounds and not isinstance(raw_bounds[0], (list, tuple, np.ndarray)):
        raw_bounds = [raw_bounds]
    if len(raw_bounds) != dimension:
        raise GridError(f"expected {dimension} (lo, hi) pairs, got {len(raw_bounds)}")

    norm_bounds: list[tuple[float, float]] = []
    for axis, pair in enumerate(raw_bounds):
        if len(pair) != 2:
            raise GridError(f"axis {axis}: bounds must be a (lo, hi) pair")
        lo, hi = float(pair[0]), float(pair[1])
        if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
            raise GridError(f"axis {axis}: degenerate bounds ({lo}, {hi})")
        norm_bounds.append((lo, hi))

    if isinstance(nodes_per_axis, (int, np.integer)):
        counts = [int(nodes_per_axis)] * dimension
    else:
        counts = [int(n) for n in nodes_per_axis]
    if len(counts) != dimension:
        raise GridError(f"expected {dimension} node counts, got {len(counts)}")
    for axis, n in enumerate(counts):
        if n < MIN_NODES_PER_AXIS:
            raise GridError(f"axis {axis}: need at least {MIN_NODES_PER_AXIS} nodes, got {n}")

    return Grid(dimension=dimension, bounds=tuple(norm_bounds), nodes_per_axis=tuple(counts))


# ===== Exponent fields =====

@dataclass(frozen=True, eq=False)
class ExponentField:
    """Nodal samples of a continuous exponent p(x) with cached p-, p+."""
    grid: Grid
    values: np.ndarray
    allow_infinite: bool = False
    p_minus: float = field(init=False)
    p_plus: float = field(init=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_nodes,):
            raise ExponentError(f"exponent needs {self.grid.n_nodes} nodal values, got shape {values.shape}")
        bad = np.isnan(values) | (values == -np.inf)
        if not self.allow_infinite:
            bad |= np.isinf(values)
        if np.any(bad):
            raise NonFiniteError("exponent field has non-finite values")
        object.__setattr__(self, "values", _frozen(values))
        object.__setattr__(self, "p_minus", float(values.min()))
        object.__setattr__(self, "p_plus", float(values.max()))

    @property
    def is_constant(self) -> bool:
        return self.p_minus == self.p_plus

    @cached_property
    def cell_values(self) -> np.ndarray:
        """p interpolated to cell midpoints."""
        return _frozen(self.grid.midpoint_operator @ self.values)

    @cached_property
    def _interpolator(self) -> RegularGridInterpolator:
        return RegularGridInterpolator(
            self.grid.axes, self.values.reshape(self.grid.nodes_per_axis), method="linear"
        )

    def at(self, points: np.ndarray | Sequence[float] | float) -> np.ndarray:
        """Piecewise (multi)linear interpolation of p at arbitrary points of the closed domain."""
        pts = np.atleast_1d(np.asarray(points, dtype=float))
        if self.grid.dimension == 1:
            pts = pts.reshape(-1, 1)
        else:
            pts = pts.reshape(-1, self.grid.dimension)
        lo = np.array([b[0] for b in self.grid.bounds])
        hi = np.array([b[1] for b in self.grid.bounds])
        return self._interpolator(np.clip(pts, lo, hi))

    @classmethod
    def constant(cls, grid: Grid, c: float) -> "ExponentField":
        return cls(grid, np.full(grid.n_nodes, float(c)))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ExponentField":
        return cls(grid, np.asarray(fn(grid.coordinates), dtype=float).reshape(grid.n_nodes))

    @classmethod
    def from_preset(cls, grid: Grid, preset: str) -> "ExponentField":
        """
        Build from a preset string:
        - constant(c)
        - linear(a,b): a + b*x1
        - sin(a,b): a + b*sin(pi*x1)
        """
        name, args = parse_preset(preset)
        x1 = grid.coordinates[:, 0]
        if name == "constant" and len(args) == 1:
            return cls.constant(grid, args[0])
        if name == "linear" and len(args) == 2:
            return cls(grid, args[0] + args[1] * x1)
        if name == "sin" and len(args) == 2:
            return cls(grid, args[0] + args[1] * np.sin(np.pi * x1))
        raise ExponentError(f"unknown exponent preset: {preset!r}")


@dataclass(frozen=True)
class ValidityReport:
    """Result of checking the exponent admissibility condition."""
    admissible: bool
    p_minus: float
    p_plus: float
    p_hat_star: float
    tilde_p: float | None
    violated_clauses: list[str]
    dimension: int

    def to_dict(self) -> dict:
        return {
            "admissible": self.admissible,
            "p_minus": self.p_minus,
            "p_plus": self.p_plus,
            "p_hat_star": self.p_hat_star,
            "tilde_p": self.tilde_p,
            "violated_clauses": list(self.violated_clauses),
            "dimension": self.dimension,
        }


CLAUSE_P_MINUS = "p_minus_gt_1"
CLAUSE_P_PLUS_LT_N = "p_plus_lt_N"
CLAUSE_HAT_STAR = "p_plus_le_p_hat_star"


def hat_star(p_minus: float, N: int) -> float:
    """N p- / (N - p-) when p- < N, else +inf."""
    if p_minus < N:
        return N * p_minus / (N - p_minus)
    return math.inf


def validate_exponents(p: ExponentField, N: int | None = None) -> ValidityReport:
    """
    Check 1 < p- <= p <= p+ < N and p+ <= N p- / (N - p-).
    Violations are reported, never raised.
    """
    N = p.grid.dimension if N is None else int(N)
    violated: list[str] = []
    if not p.p_minus > 1.0:
        violated.append(CLAUSE_P_MINUS)
    if not p.p_plus < N:
        violated.append(CLAUSE_P_PLUS_LT_N)
    p_hat = hat_star(p.p_minus, N)
    if not p.p_plus <= p_hat:
        violated.append(CLAUSE_HAT_STAR)
    return ValidityReport(
        admissible=not violated,
        p_minus=p.p_minus,
        p_plus=p.p_plus,
        p_hat_star=p_hat,
        tilde_p=tilde_p(p) if p.p_minus > 1.0 else None,
        violated_clauses=violated,
        dimension=N,
    )


def conjugate_exponent(p: ExponentField) -> ExponentField:
    """Pointwise p' = p / (p - 1)."""
    if np.any(p.values <= 1.0):
        raise ExponentError("conjugate exponent needs p > 1 everywhere", p_minus=p.p_minus)
    return ExponentField(p.grid, p.values / (p.values - 1.0))


def tilde_p(p: ExponentField) -> float:
    """min{(p- - 1) p+ / ((p+ - 1) p-), p- / p+}; equals 1 for constant p."""
    pm, pp = p.p_minus, p.p_plus
    if not pm > 1.0:
        raise ExponentError("tilde_p needs p- > 1", p_minus=pm)
    if pm == pp:
        return 1.0
    return min((pm - 1.0) * pp / ((pp - 1.0) * pm), pm / pp)


def critical_exponent(p: ExponentField, N: int | None = None) -> ExponentField:
    """Sobolev embedding exponent p*(x) = N p / (N - p) where p < N, +inf elsewhere."""
    N = p.grid.dimension if N is None else int(N)
    with np.errstate(divide="ignore"):
        values = np.where(p.values < N, N * p.values / (N - p.values), np.inf)
    return ExponentField(p.grid, values, allow_infinite=True)


# ===== Grid functions =====

@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nodal values of u; `zero_trace` marks elements of the zero-trace space."""
    grid: Grid
    values: np.ndarray
    zero_trace: bool = True

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_nodes,):
            raise GridError(f"grid function needs {self.grid.n_nodes} nodal values, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise NonFiniteError("grid function has non-finite values")
        if self.zero_trace and np.any(values[self.grid.boundary_mask] != 0.0):
            raise GridError("zero-trace function has non-zero boundary values")
        object.__setattr__(self, "values", _frozen(values))

    @property
    def interior_values(self) -> np.ndarray:
        return self.values[self.grid.interior]

    @property
    def is_zero(self) -> bool:
        return not np.any(self.values)

    def scaled(self, t: float) -> "GridFunction":
        return GridFunction(self.grid, t * self.values, self.zero_trace)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        self.grid.check_same(other.grid)
        return GridFunction(self.grid, self.values + other.values, self.zero_trace and other.zero_trace)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        self.grid.check_same(other.grid)
        return GridFunction(self.grid, self.values - other.values, self.zero_trace and other.zero_trace)

    @classmethod
    def zero(cls, grid: Grid) -> "GridFunction":
        return cls(grid, np.zeros(grid.n_nodes))

    @classmethod
    def from_interior(cls, grid: Grid, interior_values: np.ndarray) -> "GridFunction":
        values = np.zeros(grid.n_nodes)
        values[grid.interior] = interior_values
        return cls(grid, values)

    @classmethod
    def from_function(cls, grid: Grid, fn, zero_trace: bool = True) -> "GridFunction":
        values = np.asarray(fn(grid.coordinates), dtype=float).reshape(grid.n_nodes).copy()
        if zero_trace:
            values[grid.boundary_mask] = 0.0
        return cls(grid, values, zero_trace)

    @classmethod
    def from_preset(cls, grid: Grid, preset: str) -> "GridFunction":
        """
        Build from a preset string:
        - zero
        - constant(c): not zero-trace
        - hat(h): tensor hat peaking h at the centre
        - sin(a): a * prod sin(pi (x - lo) / L)
        - plateau(a,w): trapezoid of height a, flat top of relative width w
        - random(seed): seeded uniform interior values in [-1, 1]
        """
        name, args = parse_preset(preset)
        s = _unit_coordinates(grid)
        if name == "zero" and not args:
            return cls.zero(grid)
        if name == "constant" and len(args) == 1:
            return cls(grid, np.full(grid.n_nodes, float(args[0])), zero_trace=False)
        if name == "hat" and len(args) == 1:
            profile = np.prod(1.0 - np.abs(2.0 * s - 1.0), axis=1)
            return cls.from_function(grid, lambda _x: args[0] * profile)
        if name == "sin" and len(args) == 1:
            profile = np.prod(np.sin(np.pi * s), axis=1)
            return cls.from_function(grid, lambda _x: args[0] * profile)
        if name == "plateau" and len(args) == 2:
            a, w = args
            if not 0.0 <= w < 1.0:
                raise GridError("plateau width must lie in [0, 1)")
            ramp = (1.0 - np.abs(2.0 * s - 1.0)) / (1.0 - w)
            profile = np.prod(np.clip(ramp, 0.0, 1.0), axis=1)
            return cls.from_function(grid, lambda _x: a * profile)
        if name == "random" and len(args) == 1:
            rng = np.random.default_rng(int(args[0]))
            return cls.from_interior(grid, rng.uniform(-1.0, 1.0, grid.interior.size))
        raise GridError(f"unknown function preset: {preset!r}")


def _unit_coordinates(grid: Grid) -> np.ndarray:
    lo = np.array([b[0] for b in grid.bounds])
    hi = np.array([b[1] for b in grid.bounds])
    return (grid.coordinates - lo) / (hi - lo)
