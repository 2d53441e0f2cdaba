"""Utility functions for berwald-scalar."""

import logging
import os
import sys
import tempfile
from datetime import datetime
from logging.handlers import RotatingFileHandler
from pathlib import Path

from . import config

_logger: logging.Logger | None = None
_LEVELS = logging.getLevelNamesMapping()


def _reset_logger() -> None:
    """Reset the logger (useful for testing)."""
    global _logger
    if _logger is not None:
        for handler in _logger.handlers[:]:
            handler.close()
            _logger.removeHandler(handler)
        _logger = None


def _get_logger() -> logging.Logger:
    """Get or create the logger with rotating file handler."""
    global _logger
    if _logger is None:
        _logger = logging.getLogger("berwald_scalar")
        _logger.setLevel(_LEVELS.get(config.settings.log_level.upper(), logging.INFO))
        _logger.handlers.clear()
        _logger.propagate = False

        log_file = config.LOG_FILE
        log_file.parent.mkdir(parents=True, exist_ok=True)

        handler = RotatingFileHandler(
            log_file,
            maxBytes=config.settings.log_max_bytes,
            backupCount=config.settings.log_backup_count,
        )
        handler.setFormatter(logging.Formatter("%(message)s"))
        _logger.addHandler(handler)

    return _logger


def log(message: str, level: str = "INFO") -> None:
    """
    Log message to file and stderr with automatic rotation.

    Reports go to stdout, so the console echo uses stderr.

    Args:
        message: Message to log
        level: Log level (DEBUG, INFO, WARNING, ERROR)
    """
    timestamp = datetime.now().strftime("%Y-%m-%d %H:%M:%S")
    log_message = f"[{timestamp}] {message}"
    level_no = _LEVELS.get(level.upper(), logging.INFO)
    if level_no > logging.DEBUG:
        print(log_message, file=sys.stderr)
    _get_logger().log(level_no, log_message)


def write_output(text: str, out: Path | None) -> None:
    """
    Write a report to a file atomically, or to stdout when no path is given.

    Uses a temporary file and rename so that an interrupted run never leaves
    a truncated report behind.

    Args:
        text: Report content
        out: Destination path, or None for stdout
    """
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return

    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    temp_fd, temp_path = tempfile.mkstemp(dir=out.parent, prefix=f".{out.name}_", suffix=".tmp")
    try:
        with open(temp_fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        Path(temp_path).replace(out)
    except Exception:
        Path(temp_path).unlink(missing_ok=True)
        raise


def pluralize(count: int, singular: str, plural: str | None = None) -> str:
    """
    Return singular or plural form based on count.

    Args:
        count: The count to check
        singular: Singular form of the word
        plural: Plural form (defaults to singular + 's')

    Returns:
        Appropriate form with count

    Examples:
        pluralize(1, "point") -> "1 point"
        pluralize(3, "identity", "identities") -> "3 identities"
    """
    if plural is None:
        plural = f"{singular}s"
    word = singular if count == 1 else plural
    return f"{count} {word}"
