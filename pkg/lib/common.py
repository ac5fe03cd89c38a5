"""
Common utility functions.
Response envelopes and JSON coercion shared by handlers, CLI and server.
"""
import math
import unicodedata
from typing import Any

import numpy as np


def normalize(s: Any) -> str:
    """
    Normalize a string for comparison.
    - NFKC normalization
    - Lowercase
    - Strip whitespace
    """
    if s is None:
        return ""
    text = str(s).strip().lower()
    return unicodedata.normalize("NFKC", text)


def to_jsonable(value: Any) -> Any:
    """
    Recursively convert numpy scalars/arrays and tuples into JSON-safe values.
    Non-finite floats become the strings "inf", "-inf" or "nan".
    """
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        f = float(value)
        if math.isfinite(f):
            return f
        if math.isnan(f):
            return "nan"
        return "inf" if f > 0 else "-inf"
    return value


def ok(op: str, data: dict[str, Any] | None = None) -> dict[str, Any]:
    """Create a successful response."""
    return {"ok": True, "op": op, "data": data or {}}


def ng(op: str, code: str, message: str, extra: dict[str, Any] | None = None) -> dict[str, Any]:
    """Create an error response."""
    error: dict[str, Any] = {"code": str(code), "message": message}
    if extra:
        error.update(extra)
    return {"ok": False, "op": op, "error": error}
