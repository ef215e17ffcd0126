"""Configuration module for the multilingual pronunciation front-end."""

import logging
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


def _env_flag(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() in ("true", "1", "t", "yes")


class Config:
    """Configuration class for the multilingual pronunciation front-end."""

    # Environment
    DEBUG = _env_flag("DEBUG", "False")

    # Logging
    LOG_LEVEL = os.getenv("LOG_LEVEL", "DEBUG" if DEBUG else "INFO")
    LOG_FILE: Optional[str] = os.getenv("LOG_FILE") or None

    # Base paths
    ROOT_DIR = Path(__file__).parent
    SPECS_DIR = ROOT_DIR / "src" / "synthlang" / "specs"

    # Reproducibility
    DEFAULT_SEED = int(os.getenv("DEFAULT_SEED", "13"))
    NUM_THREADS = int(os.getenv("NUM_THREADS", "1"))
    DETERMINISTIC = _env_flag("DETERMINISTIC", "True")

    # Desk-scale model defaults
    DEFAULT_LAYERS = int(os.getenv("DEFAULT_LAYERS", "3"))
    DEFAULT_D_MODEL = int(os.getenv("DEFAULT_D_MODEL", "128"))
    DEFAULT_HEADS = int(os.getenv("DEFAULT_HEADS", "4"))
    DEFAULT_WARMUP_STEPS = int(os.getenv("DEFAULT_WARMUP_STEPS", "400"))
    DEFAULT_TOKENS_PER_BATCH = int(os.getenv("DEFAULT_TOKENS_PER_BATCH", "4096"))

    # Splitting
    DEFAULT_SPLIT_RATIOS = (0.85, 0.05, 0.10)
    FREQUENCY_PERCENTILE = float(os.getenv("FREQUENCY_PERCENTILE", "95"))

    @classmethod
    def log_level(cls) -> int:
        """Numeric logging level for LOG_LEVEL."""
        return getattr(logging, cls.LOG_LEVEL.upper(), logging.INFO)

