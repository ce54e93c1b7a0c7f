"""Run-time configuration: thread count from env or .env, toolkit version."""

from __future__ import annotations

import logging
import os
from pathlib import Path

logger = logging.getLogger(__name__)

VERSION = "0.4.0"
PROJECT_ROOT = Path(__file__).resolve().parent.parent
ENV_THREADS = "LDP_EIGEN_THREADS"


def _read_env(name: str) -> str | None:
    """Get a setting from the environment, then from the project .env file."""
    value = os.environ.get(name, "")
    if not value:
        try:
            env_path = PROJECT_ROOT / ".env"
            if env_path.exists():
                for line in env_path.read_text().splitlines():
                    line = line.strip()
                    if line.startswith(f"{name}=") and not line.startswith("#"):
                        value = line.split("=", 1)[1].strip().strip("\"'")
                        break
        except OSError:
            logger.debug("Failed to read %s", PROJECT_ROOT / ".env", exc_info=True)

    return value or None


def default_threads() -> int:
    """Worker cap for task-level parallelism.

    Returns LDP_EIGEN_THREADS if it is a positive integer, else the core count.
    """
    raw = _read_env(ENV_THREADS)
    if raw is not None:
        try:
            threads = int(raw)
            if threads >= 1:
                return threads
        except ValueError:
            pass
        logger.debug("Ignoring invalid %s=%r", ENV_THREADS, raw)
    return os.cpu_count() or 1
