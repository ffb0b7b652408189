"""Environment-based configuration management."""

import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

PROJECT_ROOT = Path(__file__).parent.parent.parent.parent


def load_env_file(env_file: Optional[Path] = None) -> bool:
    """
    Load MIMODET_* variables from a .env file without overriding the real environment.

    :param env_file: Path to the file, <project root>/.env by default.
    :return: True if a file was read.
    """
    env_file = env_file or PROJECT_ROOT / ".env"
    if not env_file.is_file():
        return False
    return load_dotenv(env_file, override=False)


# Must run before Config reads the environment
load_env_file()


def _env_flag(name: str, default: bool) -> bool:
    return os.getenv(name, str(default)).strip().lower() in ("1", "true", "yes", "on")


class Config:
    """Central configuration class for MIMO Detect."""

    ROOT_DIR: Path = PROJECT_ROOT

    OUTPUT_DIR: Path = ROOT_DIR / os.getenv("MIMODET_OUTPUT_DIR", "output")
    LOG_DIR: Path = ROOT_DIR / os.getenv("MIMODET_LOG_DIR", "logs")

    LOG_LEVEL: str = os.getenv("MIMODET_LOG_LEVEL", "INFO")
    LOG_TO_CONSOLE: bool = _env_flag("MIMODET_LOG_TO_CONSOLE", True)

    # 0 means all cores
    WORKERS: int = int(os.getenv("MIMODET_WORKERS", "0"))

    CSV_FLOAT_FORMAT: str = os.getenv("MIMODET_CSV_FLOAT_FORMAT", "%.6g")

    @classmethod
    def ensure_directories(cls) -> None:
        cls.LOG_DIR.mkdir(parents=True, exist_ok=True)

    @classmethod
    def get_log_file(cls, log_type: str) -> Path:
        """Path of the general, error or debug log."""
        return cls.LOG_DIR / f"{log_type}.log"

    @classmethod
    def output_root(cls, configured: Optional[str] = None) -> Path:
        """
        Artifact root for a run.

        MIMODET_OUTPUT_DIR, re-read on every call, wins over the experiment's
        output_dir, which wins over the default.
        """
        override = os.getenv("MIMODET_OUTPUT_DIR")
        if override:
            return cls.ROOT_DIR / override
        if configured:
            return Path(configured)
        return cls.OUTPUT_DIR

    @classmethod
    def worker_count(cls, requested: Optional[int] = None) -> int:
        """Resolve a worker count; None or 0 falls back to the environment, then all cores."""
        workers = requested if requested else cls.WORKERS
        if not workers:
            workers = os.cpu_count() or 1
        return max(1, workers)
