"""Base selector class and the design problem all selectors solve."""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Optional, Sequence

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, model_validator

from surveyopt.core.config import Settings
from surveyopt.core.errors import InfeasibleBudgetError
from surveyopt.core.types import Selection, SweepPoint
from surveyopt.cost.grid import Clusters, Individuals, SizeGrid
from surveyopt.cost.model import CostModel, cheapest_cost
from surveyopt.data.groups import GroupSpec
from surveyopt.data.sample import PreSample

logger = structlog.get_logger()

Size = Individuals | Clusters


class DesignProblem(BaseModel):
    """Pre-experimental sample, groups, cost model, budget and size grid."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    sample: PreSample
    groups: GroupSpec
    model: CostModel
    budget: float = Field(ge=0)
    grid: SizeGrid

    @model_validator(mode="after")
    def _check(self) -> DesignProblem:
        if self.groups.n_covariates != self.sample.n_covariates:
            raise ValueError(
                f"groups cover {self.groups.n_covariates} columns, "
                f"sample has {self.sample.n_covariates}"
            )
        if self.model.n_covariates != self.sample.n_sources:
            raise ValueError(
                f"cost model prices {self.model.n_covariates} covariates, "
                f"sample has {self.sample.n_sources}"
            )
        return self

    def mask(self, indices: Sequence[int]) -> np.ndarray:
        """Cost-model selection vector for sample columns."""
        return self.sample.source_selection(indices)

    def cost(self, indices: Sequence[int], size: Size) -> float:
        return self.model.total_cost(self.mask(indices), size)

    def cheapest(self) -> float:
        """Lowest cost over the grid of a design with only the forced covariates."""
        return cheapest_cost(self.model, self.mask(self.groups.forced), self.grid)

    def names(self, indices: Sequence[int]) -> tuple[str, ...]:
        """Collectable covariate names behind sample columns, in source order."""
        sources = sorted({self.sample.sources[j] for j in indices})
        return tuple(self.sample.source_names[s] for s in sources)

    def with_budget(self, budget: float) -> DesignProblem:
        return DesignProblem(
            sample=self.sample,
            groups=self.groups,
            model=self.model,
            budget=budget,
            grid=self.grid,
        )


def better(a: Selection, b: Selection) -> bool:
    """Whether ``a`` beats ``b``: lower criterion, then larger n, then fewer covariates."""
    if not math.isclose(a.criterion, b.criterion, rel_tol=1e-12, abs_tol=0.0):
        return a.criterion < b.criterion
    if a.size.key != b.size.key:
        return a.size.key > b.size.key
    return a.k < b.k


class BaseSelector(ABC):
    """Base class for design methods.

    A selector solves the inner problem at one sample size (``select_at``); ``design``
    runs it over the whole grid and keeps the best feasible size. Work that does not
    depend on the size is done once in ``prepare``.
    """

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or Settings()

    @property
    @abstractmethod
    def method_name(self) -> str:
        """Name of this method (e.g., 'oga', 'lasso')."""
        ...

    @abstractmethod
    def prepare(self, problem: DesignProblem) -> Any:
        """Size-independent state shared by every ``select_at`` call."""
        ...

    @abstractmethod
    def select_at(self, state: Any, problem: DesignProblem, size: Size) -> Selection:
        """Best selection at one size.

        Raises:
            InfeasibleBudgetError: If the size is unaffordable even without covariates.
        """
        ...

    def select(self, problem: DesignProblem, size: Size) -> Selection:
        return self.select_at(self.prepare(problem), problem, size)

    def design(
        self, problem: DesignProblem, threads: Optional[int] = None, state: Any = None
    ) -> Selection:
        """Run the inner selection at every grid size and return the best one.

        ``state`` reuses a ``prepare`` result for the same sample and groups.

        Raises:
            InfeasibleBudgetError: If no grid size is feasible.
        """
        if state is None:
            state = self.prepare(problem)
        threads = threads or self.settings.threads

        def _try(size: Size) -> Selection | None:
            try:
                return self.select_at(state, problem, size)
            except InfeasibleBudgetError:
                return None

        sizes = list(problem.grid)
        if threads > 1 and len(sizes) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(_try, sizes))
        else:
            results = [_try(size) for size in sizes]

        infeasible = [str(size) for size, sel in zip(sizes, results) if sel is None]
        feasible = [sel for sel in results if sel is not None]
        if not feasible:
            cheapest = problem.cheapest()
            raise InfeasibleBudgetError(
                f"no grid size is feasible: budget {problem.budget:,.2f} is below the "
                f"cheapest design ({cheapest:,.2f})",
                budget=problem.budget,
                cheapest=cheapest,
            )
        if infeasible:
            logger.debug("Skipped infeasible sizes", method=self.method_name, count=len(infeasible))

        best = feasible[0]
        for sel in feasible[1:]:
            if better(sel, best):
                best = sel

        sweep = tuple(
            SweepPoint(size=sel.size, criterion=sel.criterion, k=sel.k, cost=sel.cost)
            for sel in feasible
        )
        diagnostics = dict(best.diagnostics)
        diagnostics["infeasible_sizes"] = infeasible
        diagnostics["feasible_sizes"] = len(feasible)
        logger.info(
            "Design search done",
            method=self.method_name,
            sizes=len(sizes),
            feasible=len(feasible),
            n=best.n,
            k=best.k,
            rmse=best.rmse,
        )
        return best.model_copy(update={"sweep": sweep, "diagnostics": diagnostics})
