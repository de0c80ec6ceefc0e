"""Exceptions raised by surveyopt."""

from __future__ import annotations

from typing import Optional


class InfeasibleBudgetError(ValueError):
    """No design satisfies the budget constraint."""

    def __init__(self, message: str, budget: float, cheapest: Optional[float] = None):
        super().__init__(message)
        self.budget = budget
        self.cheapest = cheapest


class TargetUnachievableError(ValueError):
    """An equivalent-budget target cannot be met under the budget cap."""

    def __init__(self, message: str, target: float, cap: float):
        super().__init__(message)
        self.target = target
        self.cap = cap
