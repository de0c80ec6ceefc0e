"""surveyopt: budget-constrained covariate and sample-size selection for RCT surveys."""

__version__ = "0.1.0"

from surveyopt.core.types import DesignReport, Method, Selection

__all__ = [
    "DesignReport",
    "Method",
    "Selection",
]
