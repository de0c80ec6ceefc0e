"""Logging configuration for surveyopt."""

from __future__ import annotations

import logging
import sys
from typing import Any

import structlog


def configure_logging(*, verbose: bool = False, **context: Any) -> None:
    """Configure structlog output level and the run context.

    Events go to stderr so that tables and JSON on stdout stay machine-readable.

    Args:
        verbose: If True, show solver progress (sweeps, bisection steps, skipped sizes)
                 at DEBUG level. If False (default), suppress logs below WARNING.
        **context: Run fields (``command``, ``cost``, ``method``, ...) attached to every
                   event of this run. None values are dropped.
    """
    level = logging.DEBUG if verbose else logging.WARNING

    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.dev.ConsoleRenderer(),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level),
        logger_factory=_stderr_logger,
    )
    structlog.contextvars.clear_contextvars()
    bind_run_context(**context)


def _stderr_logger(*args: Any) -> structlog.PrintLogger:
    # sys.stderr looked up per logger, not at configure time
    return structlog.PrintLogger(file=sys.stderr)


def bind_run_context(**context: Any) -> None:
    """Add fields to the run context of the current thread."""
    fields = {key: value for key, value in context.items() if value is not None}
    if fields:
        structlog.contextvars.bind_contextvars(**fields)
