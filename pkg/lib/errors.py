"""
Standardized error handling for the vexp toolkit.
Provides error codes, the exception hierarchy raised by the numerical layer,
envelope helpers and the exit-code mapping used by the CLI.
"""
from enum import Enum
from typing import Any

from lib.common import ng, to_jsonable


class ErrorCode(str, Enum):
    """Standardized error codes used across the toolkit."""
    BAD_REQUEST = "BAD_REQUEST"
    BAD_CONFIG = "BAD_CONFIG"
    BAD_GRID = "BAD_GRID"
    GRID_MISMATCH = "GRID_MISMATCH"
    BAD_EXPONENT = "BAD_EXPONENT"
    NON_FINITE = "NON_FINITE"
    BAD_POTENTIAL = "BAD_POTENTIAL"
    MISSING_METADATA = "MISSING_METADATA"
    AUDIT_FAILED = "AUDIT_FAILED"
    GEOMETRY_NOT_FOUND = "GEOMETRY_NOT_FOUND"
    FAR_POINT_NOT_FOUND = "FAR_POINT_NOT_FOUND"
    NOT_CONVERGED = "NOT_CONVERGED"
    IO_ERROR = "IO_ERROR"
    INTERNAL_ERROR = "INTERNAL_ERROR"


EXIT_CODES: dict[str, int] = {
    ErrorCode.AUDIT_FAILED.value: 2,
    ErrorCode.GEOMETRY_NOT_FOUND.value: 3,
    ErrorCode.FAR_POINT_NOT_FOUND.value: 3,
    ErrorCode.NOT_CONVERGED.value: 3,
}


def exit_code_for(code: str | None) -> int:
    """Map an error code to a process exit code (0 when code is None)."""
    if code is None:
        return 0
    return EXIT_CODES.get(str(getattr(code, "value", code)), 1)


# ===== Exceptions raised by the numerical layer =====

class VexpError(Exception):
    """Base class; carries an ErrorCode and optional structured details."""

    code: ErrorCode = ErrorCode.INTERNAL_ERROR

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details = details


class GridError(VexpError):
    code = ErrorCode.BAD_GRID


class GridMismatchError(VexpError):
    code = ErrorCode.GRID_MISMATCH


class ExponentError(VexpError):
    code = ErrorCode.BAD_EXPONENT


class NonFiniteError(VexpError):
    code = ErrorCode.NON_FINITE


class PotentialError(VexpError):
    code = ErrorCode.BAD_POTENTIAL


class MetadataError(VexpError):
    code = ErrorCode.MISSING_METADATA


class AuditFailedError(VexpError):
    """Hypotheses of the requested theorem do not hold; details carry the audits."""

    code = ErrorCode.AUDIT_FAILED


class GeometryNotFoundError(VexpError):
    code = ErrorCode.GEOMETRY_NOT_FOUND


class FarPointNotFoundError(VexpError):
    code = ErrorCode.FAR_POINT_NOT_FOUND


class NotConvergedError(VexpError):
    """Iteration cap reached; `best` holds the best-so-far result."""

    code = ErrorCode.NOT_CONVERGED

    def __init__(self, message: str, best: Any = None, **details: Any) -> None:
        super().__init__(message, **details)
        self.best = best


class ConfigError(VexpError):
    """Scenario file problem; `field` is a dotted path, `line` when known."""

    code = ErrorCode.BAD_CONFIG

    def __init__(self, message: str, field: str | None = None, line: int | None = None) -> None:
        details: dict[str, Any] = {}
        if field is not None:
            details["field"] = field
        if line is not None:
            details["line"] = line
        super().__init__(message, **details)
        self.field = field
        self.line = line


# ===== Envelope helpers =====

def from_exception(op: str, exc: VexpError) -> dict[str, Any]:
    """Create an error response from a VexpError."""
    return ng(op, exc.code.value, exc.message, to_jsonable(exc.details) if exc.details else None)


def bad_request(op: str, message: str) -> dict[str, Any]:
    """Create a BAD_REQUEST error response."""
    return ng(op, ErrorCode.BAD_REQUEST.value, message)


def internal_error(op: str, message: str) -> dict[str, Any]:
    """Create an INTERNAL_ERROR error response."""
    return ng(op, ErrorCode.INTERNAL_ERROR.value, message)
