"""Logging configuration for mcn-seg.

Loguru-based logging with a coloured console handler and optional
rotating file handlers. Library modules simply ``from loguru import
logger``; only the CLI (or an embedding application) calls
:func:`configure_logging`.
"""

import sys
from pathlib import Path

from loguru import logger

DEFAULT_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss}</green> | "
    "<level>{level: <8}</level> | "
    "<cyan>{name}</cyan>:<cyan>{function}</cyan>:<cyan>{line}</cyan> | "
    "<level>{message}</level>"
)
FILE_FORMAT = (
    "{time:YYYY-MM-DD HH:mm:ss} | {level: <8} | "
    "{name}:{function}:{line} | {message}"
)


def configure_logging(
    level: str = "INFO",
    log_to_file: bool = False,
    log_dir: str | Path = "logs",
    format_string: str | None = None,
) -> None:
    """Configure loguru handlers, replacing any existing ones.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_to_file: Whether to log to ``log_dir`` in addition to stderr
        log_dir: Directory for ``mcn_seg.log`` and ``mcn_seg_errors.log``
        format_string: Custom console format (uses default if None)

    Example:
        >>> from mcn_seg.logging_config import configure_logging
        >>> configure_logging(level="DEBUG")
    """
    logger.remove()
    logger.add(
        sys.stderr,
        format=format_string or DEFAULT_FORMAT,
        level=level.upper(),
        colorize=True,
        backtrace=True,
        diagnose=False,
    )

    if log_to_file:
        log_path = Path(log_dir)
        log_path.mkdir(parents=True, exist_ok=True)

        logger.add(
            log_path / "mcn_seg.log",
            format=FILE_FORMAT,
            level=level.upper(),
            rotation="10 MB",
            retention="7 days",
            backtrace=True,
            diagnose=False,
        )
        logger.add(
            log_path / "mcn_seg_errors.log",
            format=FILE_FORMAT + "\n{exception}",
            level="ERROR",
            rotation="5 MB",
            retention="30 days",
            backtrace=True,
            diagnose=False,
        )

    logger.debug(f"Logging configured: level={level}, file_logging={log_to_file}")


def add_run_log(run_dir: str | Path, level: str = "INFO") -> int:
    """Mirror the log stream into ``<run_dir>/run.log``; returns the handler id."""
    path = Path(run_dir) / "run.log"
    path.parent.mkdir(parents=True, exist_ok=True)
    return logger.add(path, format=FILE_FORMAT, level=level.upper())


def get_logger(name: str):
    """Get a logger bound to ``name`` (typically ``__name__``).

    Example:
        >>> from mcn_seg.logging_config import get_logger
        >>> log = get_logger(__name__)
        >>> log.info("lattice built")
    """
    return logger.bind(module=name)
