"""
Configuration constants for the vexp toolkit.
Centralizes tolerances, solver defaults and preset names.
Every value here can be overridden from a scenario file.
"""
from typing import Final

# Output schema
SCHEMA_VERSION: Final[int] = 1

# Grid
MIN_NODES_PER_AXIS: Final[int] = 3
SUPPORTED_DIMENSIONS: Final[tuple[int, ...]] = (1, 2)

# Luxemburg root finding (relative)
LUXEMBURG_RTOL: Final[float] = 1e-12
LUXEMBURG_MAX_EXPANSIONS: Final[int] = 200

# Potentials
BREAKPOINT_TOL: Final[float] = 1e-9
AUDIT_TOL: Final[float] = 1e-9

# Cached p == 2 operators (one entry per grid key)
OPERATOR_CACHE_SIZE: Final[int] = 8

# Degenerate weight regularisation (slopes and Jacobians only)
GRADIENT_EPS: Final[float] = 1e-10

# lambda_* / Poincare search
LAMBDA_STAR_RESTARTS: Final[int] = 4
LAMBDA_STAR_MAX_ITERS: Final[int] = 400
LAMBDA_STAR_RTOL: Final[float] = 1e-10

# Mountain pass
DEFAULT_PATH_NODES: Final[int] = 17
DEFAULT_MAX_ITERS: Final[int] = 2000
DEFAULT_TOL: Final[float] = 1e-6
REDISTRIBUTE_EVERY: Final[int] = 10
TIE_TOL: Final[float] = 1e-12
MONOTONE_TOL: Final[float] = 1e-12
PATH_SWITCH_TOL: Final[float] = 1e-2
NEWTON_MAX_ITERS: Final[int] = 60
NEWTON_SNAP_TOL: Final[float] = 1e-7
RELEASE_TOL: Final[float] = 1e-12
RAY_T_MIN: Final[float] = 1e-8
RAY_T_MAX: Final[float] = 1e8
RAY_XTOL: Final[float] = 1e-15
DEFAULT_RHO_GRID: Final[tuple[float, ...]] = (0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9)
DEFAULT_SAMPLES_PER_SPHERE: Final[int] = 24
DEFAULT_T_MAX: Final[float] = 1024.0
DEFAULT_SEED: Final[int] = 0

# PS diagnostics
PS_GROWTH_FACTOR: Final[float] = 4.0
PS_CAUCHY_TAIL: Final[int] = 3
PS_CAUCHY_TOL: Final[float] = 1e-6

# Audit sampling
GROWTH_T_MAX: Final[float] = 1e3
NEAR_ZERO_SHELLS: Final[tuple[int, ...]] = (1, 2, 3, 4, 5, 6, 7, 8)
TANG_T_RANGE: Final[tuple[float, float]] = (10.0, 1e4)
SUPERLINEAR_T_MAX: Final[float] = 1e3
POINTS_PER_SHELL: Final[int] = 7
DEFAULT_TANG_C: Final[float] = 1e-3
DEFAULT_MU_CLAIM: Final[float] = 1e-6
DEFAULT_SUPERLINEAR_M: Final[float] = 2.0
LIMSUP_TAIL_SHELLS: Final[int] = 3
SCALING_FACTORS: Final[tuple[float, ...]] = (1.5, 2.0, 4.0)
X_SAMPLES: Final[int] = 9
MAX_WITNESSES: Final[int] = 10
FAR_POINT_SCALES: Final[tuple[float, ...]] = (1.0, 2.0, 4.0, 8.0)

# Preset names accepted in scenario files
EXPONENT_PRESETS: Final[tuple[str, ...]] = ("constant", "linear", "sin")
FUNCTION_PRESETS: Final[tuple[str, ...]] = (
    "zero", "constant", "hat", "sin", "plateau", "random",
)
POTENTIAL_PRESETS: Final[tuple[str, ...]] = (
    "j1", "j2", "benchmark", "power", "quadratic", "abs", "exponential", "zero",
)

# Scenario commands
COMMANDS: Final[tuple[str, ...]] = ("norms", "audit", "lambda-star", "solve")

# Artifact file names
SUMMARY_FILE: Final[str] = "summary.json"
SOLUTION_FILE: Final[str] = "solution.csv"
