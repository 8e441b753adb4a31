"""Logging utilities for MongeForge."""

import logging
import os
import sys

from rich.console import Console
from rich.logging import RichHandler

PACKAGE = "mongeforge"
LEVEL_ENV = "MONGEFORGE_LOG_LEVEL"

# Create default console
default_console = Console(stderr=True)


def default_level() -> int:
    """Level named by ``MONGEFORGE_LOG_LEVEL``, INFO when unset or unknown."""
    level = logging.getLevelName(os.getenv(LEVEL_ENV, "INFO").upper())
    return level if isinstance(level, int) else logging.INFO


def setup_logger(
    name: str = PACKAGE,
    level: int | None = None,
    console: Console | None = None,
) -> logging.Logger:
    """Set up a logger with rich formatting."""
    level = default_level() if level is None else level
    logger = logging.getLogger(name)
    logger.setLevel(level)

    # Remove existing handlers
    logger.handlers = []

    handler = RichHandler(
        console=console or default_console,
        show_path=False,
        omit_repeated_times=False,
        rich_tracebacks=True,
    )
    handler.setLevel(level)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.addHandler(handler)

    # Module loggers hang off the package logger and must not print twice
    logger.propagate = name != PACKAGE

    return logger


def get_logger(name: str = PACKAGE) -> logging.Logger:
    """Get an existing logger or create a new one.

    Module loggers (``mongeforge.core.scene`` and friends) are plain children of the
    package logger, so they inherit its rich handler and level.
    """
    if name.startswith(f"{PACKAGE}."):
        get_logger(PACKAGE)
        return logging.getLogger(name)
    logger = logging.getLogger(name)
    if not logger.handlers:
        return setup_logger(name)
    return logger


def set_level(level: int) -> None:
    """Change the level of the package logger and its handlers."""
    logger = get_logger()
    logger.setLevel(level)
    for handler in logger.handlers:
        handler.setLevel(level)


def log_exception(
    logger: logging.Logger,
    exc: Exception,
    message: str | None = None,
    exit_code: int | None = None,
) -> None:
    """Log an exception and optionally exit.

    The error class is named so scene, profile and parse failures read apart on the console;
    the traceback is only shown at DEBUG.
    """
    kind = type(exc).__name__
    if message:
        logger.error(f"{message}: {kind}: {exc}")
    else:
        logger.error(f"{kind}: {exc}")
    logger.debug("Traceback", exc_info=exc)

    if exit_code is not None:
        sys.exit(exit_code)
