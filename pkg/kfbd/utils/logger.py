"""
Logging Configuration

Every record carries the run context (subcommand and seed) so that log lines
from concurrent experiments can be told apart. Console logs go to stderr
because stdout carries the JSON/CSV reports. In production each run also
appends JSON lines to logs/kfbd.log, including any numeric detail passed via
`extra` (such as the residual of a failed solve).

Usage:
    from kfbd.utils.logger import get_logger, set_run_context
    logger = get_logger(__name__)
    set_run_context("verify", seed=42)
    logger.warning("Newton stalled", extra={"residual": 1e-3, "trial": 17})
"""

import logging
import sys
from pathlib import Path
from pythonjsonlogger import jsonlogger

from kfbd.utils.config import settings

CONSOLE_FORMAT = "%(asctime)s | %(levelname)-8s | %(command)s seed=%(seed)s | %(name)s | %(message)s"
JSON_FIELDS = "%(asctime)s %(name)s %(levelname)s %(command)s %(seed)s %(message)s"

_run_context = {"command": "-", "seed": None}


class RunContextFilter(logging.Filter):
    """Stamps the current subcommand and seed onto each record"""

    def filter(self, record: logging.LogRecord) -> bool:
        record.command = _run_context["command"]
        record.seed = _run_context["seed"] if _run_context["seed"] is not None else settings.DEFAULT_SEED
        return True


def set_run_context(command: str, seed: int | None = None) -> None:
    """Set the subcommand and seed reported by every kfbd logger"""
    _run_context["command"] = command
    _run_context["seed"] = seed


def json_formatter() -> jsonlogger.JsonFormatter:
    return jsonlogger.JsonFormatter(fmt=JSON_FIELDS)


def get_logger(name: str) -> logging.Logger:
    """
    Get a configured logger instance

    Args:
        name: Usually __name__ of the calling module

    Returns:
        Logger writing run-stamped lines to stderr (and JSON in production)
    """
    logger = logging.getLogger(name)
    if logger.handlers:
        return logger

    logger.setLevel(settings.LOG_LEVEL)
    logger.propagate = False
    context = RunContextFilter()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(logging.Formatter(fmt=CONSOLE_FORMAT, datefmt="%Y-%m-%d %H:%M:%S"))
    console_handler.addFilter(context)
    logger.addHandler(console_handler)

    if settings.is_production:
        log_dir = Path("logs")
        log_dir.mkdir(exist_ok=True)
        file_handler = logging.FileHandler(log_dir / "kfbd.log")
        file_handler.setFormatter(json_formatter())
        file_handler.addFilter(context)
        logger.addHandler(file_handler)

    return logger


def set_level(level: str) -> None:
    """Change the level of every kfbd logger (CLI --log-level)"""
    level = level.upper()
    for name, candidate in logging.root.manager.loggerDict.items():
        if name.startswith("kfbd") and isinstance(candidate, logging.Logger):
            candidate.setLevel(level)
