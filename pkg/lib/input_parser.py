"""
Input parsing and validation utilities.

Functions for parsing preset strings such as "linear(2,1)" and for
normalizing MCP tool inputs (strings, dicts, numbers).
"""
import re
from typing import Any

from lib.errors import ConfigError

_PRESET_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?\s*$")


def strip_quotes(s: str) -> str:
    """
    Strip outer quotes from a string.

    Args:
        s: Input string

    Returns:
        String with leading/trailing quotes removed
    """
    s = s.strip()
    if (s.startswith('"') and s.endswith('"')) or (s.startswith("'") and s.endswith("'")):
        return s[1:-1]
    return s


def parse_preset(text: str) -> tuple[str, tuple[float, ...]]:
    """
    Split a preset string into its name and numeric arguments.

    Examples:
        "zero"         -> ("zero", ())
        "linear(2,1)"  -> ("linear", (2.0, 1.0))
        " sin( 2, .5)" -> ("sin", (2.0, 0.5))

    Raises:
        ConfigError: malformed preset or non-numeric argument
    """
    if not isinstance(text, str):
        raise ConfigError(f"preset must be a string, got {type(text).__name__}")
    m = _PRESET_RE.match(strip_quotes(text))
    if not m:
        raise ConfigError(f"malformed preset: {text!r}")
    name, raw_args = m.group(1).lower(), m.group(2)
    if raw_args is None or raw_args.strip() == "":
        return name, ()
    args: list[float] = []
    for part in raw_args.split(","):
        try:
            args.append(float(part.strip()))
        except ValueError as e:
            raise ConfigError(f"non-numeric argument {part.strip()!r} in preset {text!r}") from e
    return name, tuple(args)


def coerce_str(x: Any, keys: tuple[str, ...] = ()) -> str | None:
    """
    Extract a string from various input formats.

    Handles:
    - Direct string input
    - Dict with specified keys
    """
    if isinstance(x, str):
        return strip_quotes(x)
    if isinstance(x, dict):
        for k in keys:
            v = x.get(k)
            if isinstance(v, str):
                return strip_quotes(v)
    return None


def coerce_int(x: Any, keys: tuple[str, ...] = ()) -> int | None:
    """
    Extract an integer from various input formats.

    Returns:
        Extracted integer or None if not found/invalid
    """
    if isinstance(x, bool):
        return None
    if isinstance(x, int):
        return x
    if isinstance(x, str):
        try:
            return int(x.strip())
        except ValueError:
            return None
    if isinstance(x, dict):
        for k in keys:
            result = coerce_int(x.get(k), ())
            if result is not None:
                return result
    return None


def coerce_float(x: Any, keys: tuple[str, ...] = ()) -> float | None:
    """Extract a float; ints are widened, bools rejected."""
    if isinstance(x, bool):
        return None
    if isinstance(x, (int, float)):
        return float(x)
    if isinstance(x, str):
        try:
            return float(x.strip())
        except ValueError:
            return None
    if isinstance(x, dict):
        for k in keys:
            result = coerce_float(x.get(k), ())
            if result is not None:
                return result
    return None


def coerce_bool(x: Any, keys: tuple[str, ...] = ()) -> bool | None:
    """
    Extract a boolean from various input formats.

    Returns:
        Extracted boolean or None if not found/invalid
    """
    if isinstance(x, bool):
        return x
    if isinstance(x, str):
        lower = x.lower().strip()
        if lower in ("true", "1", "yes"):
            return True
        if lower in ("false", "0", "no"):
            return False
        return None
    if isinstance(x, dict):
        for k in keys:
            result = coerce_bool(x.get(k), ())
            if result is not None:
                return result
    return None
