"""Selector registry and factory for surveyopt."""

from __future__ import annotations

import structlog

from surveyopt.core.config import Settings
from surveyopt.selectors.base import BaseSelector

logger = structlog.get_logger()

AVAILABLE = ("oga", "lasso", "post-lasso")


class SelectorRegistry:
    """Factory for creating design selectors by method name."""

    @staticmethod
    def create(method: str, settings: Settings | None = None) -> BaseSelector:
        """Create a selector for ``method``."""
        method = method.lower()
        logger.debug("Creating selector", method=method)

        if method == "oga":
            from surveyopt.selectors.oga import OgaSelector

            return OgaSelector(settings)
        elif method in ("lasso", "post-lasso"):
            from surveyopt.selectors.lasso import LassoSelector

            return LassoSelector(method, settings)
        else:
            raise ValueError(f"Unknown method: {method}. Available: {', '.join(AVAILABLE)}")
