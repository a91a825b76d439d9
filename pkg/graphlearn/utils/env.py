from __future__ import annotations

import logging
import os
from pathlib import Path

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

DEFAULT_OUTPUT_DIR = "runs"
DEFAULT_WORKERS = 1
DEFAULT_LOG_LEVEL = "WARNING"


def _level_names() -> dict[str, int]:
    # logging.getLevelNamesMapping is Python 3.11+; it returns a copy of _nameToLevel.
    getter = getattr(logging, "getLevelNamesMapping", None)
    return getter() if getter is not None else dict(logging._nameToLevel)


def load_env(*, override: bool = False) -> Path | None:
    repo_root = Path(__file__).resolve().parents[2]
    candidates = [
        repo_root / ".env",
        Path.cwd() / ".env",
    ]
    for path in candidates:
        if path.is_file():
            load_dotenv(dotenv_path=path, override=override)
            return path
    return None


def env_int(name: str, default: int, *, minimum: int | None = None) -> int:
    raw = (os.getenv(name) or "").strip()
    if not raw:
        return default
    try:
        value = int(raw)
    except ValueError:
        logger.warning("ignoring %s=%r: not an integer", name, raw)
        return default
    if minimum is not None and value < minimum:
        logger.warning("ignoring %s=%s: must be >= %s", name, value, minimum)
        return default
    return value


def output_dir_default() -> Path:
    return Path((os.getenv("GRAPHLEARN_OUTPUT_DIR") or "").strip() or DEFAULT_OUTPUT_DIR)


def workers_default() -> int:
    return env_int("GRAPHLEARN_WORKERS", DEFAULT_WORKERS, minimum=1)


def log_level_default() -> str:
    level = (os.getenv("GRAPHLEARN_LOG_LEVEL") or "").strip().upper() or DEFAULT_LOG_LEVEL
    if level not in _level_names():
        logger.warning("ignoring GRAPHLEARN_LOG_LEVEL=%s: unknown level", level)
        return DEFAULT_LOG_LEVEL
    return level
