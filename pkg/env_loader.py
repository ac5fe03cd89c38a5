"""
Environment variable loader for the vexp toolkit.
Handles loading defaults from a .env file or the process environment.
"""
import os
from pathlib import Path

# Load .env file if it exists
from dotenv import load_dotenv

from config import DEFAULT_SEED


# Find .env file (look in current dir and parent dirs)
def _find_env_file() -> Path | None:
    current = Path(__file__).parent
    for _ in range(3):  # Check up to 3 levels up
        env_path = current / ".env"
        if env_path.exists():
            return env_path
        current = current.parent
    return None


_env_file = _find_env_file()
if _env_file:
    load_dotenv(_env_file)


def get_log_level() -> str:
    """Get logging level name (VEXP_LOG_LEVEL, default WARNING)."""
    return os.environ.get("VEXP_LOG_LEVEL", "WARNING").upper()


def get_default_seed() -> int:
    """
    Get the default random seed.

    Raises:
        RuntimeError: If VEXP_SEED is set but not an integer
    """
    raw = os.environ.get("VEXP_SEED")
    if raw is None or raw.strip() == "":
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError as e:
        raise RuntimeError(f"Invalid VEXP_SEED: {raw!r}") from e


def get_output_dir() -> Path | None:
    """Get default output directory if configured."""
    raw = os.environ.get("VEXP_OUT_DIR")
    return Path(raw) if raw else None
