"""Centralized logging configuration for the pronunciation front-end."""

import logging
import sys
from functools import lru_cache
from pathlib import Path
from typing import List, Optional, Union

from config import Config

DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


@lru_cache(maxsize=None)
def _shared_handlers(log_file: Optional[str], log_format: str) -> List[logging.Handler]:
    """Console (stderr) plus an optional file; one set per (file, format)."""
    formatter = logging.Formatter(log_format)
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        path = Path(log_file)
        path.parent.mkdir(parents=True, exist_ok=True)
        handlers.append(logging.FileHandler(path, encoding="utf-8"))
    for handler in handlers:
        handler.setFormatter(formatter)
    return handlers


def setup_logger(
    name: str,
    log_file: Optional[Union[str, Path]] = None,
    level: Optional[int] = None,
    log_format: str = DEFAULT_FORMAT
) -> logging.Logger:
    """Return the named logger wired to the shared handlers.

    Args:
        name: Usually the calling module's `__name__`
        log_file: Overrides Config.LOG_FILE; console only when neither is set
        level: Overrides Config.LOG_LEVEL

    Safe to call repeatedly: handlers are attached once per logger.
    """
    target = logging.getLogger(name)
    target.setLevel(Config.log_level() if level is None else level)
    if not target.handlers:
        file_name = str(log_file or Config.LOG_FILE or "") or None
        for handler in _shared_handlers(file_name, log_format):
            target.addHandler(handler)
    return target
