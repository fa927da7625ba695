"""Handling logger setup."""

from __future__ import annotations

import logging
from pathlib import Path

LOG_FORMAT = (
    "%(asctime)s [%(filename)s] [%(funcName)s] [%(levelname)s] [%(lineno)d] %(message)s"
)


def get_logger(name: str, level: int = logging.INFO) -> logging.Logger:
    """Configure the logger component."""

    logger = logging.getLogger(name)

    logFormatter = logging.Formatter(LOG_FORMAT)

    consoleHandler = logging.StreamHandler()
    consoleHandler.setFormatter(logFormatter)

    if not len(logger.root.handlers) and not len(logger.handlers):
        logger.setLevel(level)
        logger.addHandler(consoleHandler)

    return logger


def attach_run_log(logger: logging.Logger, run_dir: str | Path) -> logging.Handler:
    """Mirror a logger into <run_dir>/run.log and return the handler."""
    path = Path(run_dir) / "run.log"
    path.parent.mkdir(parents=True, exist_ok=True)

    fileHandler = logging.FileHandler(path, encoding="utf-8")
    fileHandler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(fileHandler)

    return fileHandler
