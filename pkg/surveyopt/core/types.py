"""Core result types for surveyopt."""

from __future__ import annotations

import math
from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field

from surveyopt.cost.grid import SizeChoice


class Method(str, Enum):
    """Design method."""

    OGA = "oga"
    LASSO = "lasso"
    POST_LASSO = "post-lasso"
    EXPERIMENT = "experiment"


class PathStep(BaseModel):
    """One committed greedy step."""

    step: int
    group: int
    rss: float


class SweepPoint(BaseModel):
    """Inner solution at one grid size, kept for grid-optimality checks."""

    size: SizeChoice
    criterion: float
    k: int
    cost: float


class Selection(BaseModel):
    """A candidate design: sample size, covariates to collect and the resulting criterion.

    ``selected_indices`` are covariate columns of the sample that was searched;
    ``selected_names`` are the collectable covariates they come from. ``criterion`` is
    the residual variance divided by the effective sample size.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    method: str
    size: SizeChoice
    selected_groups: tuple[int, ...] = ()
    selected_indices: tuple[int, ...] = ()
    selected_names: tuple[str, ...] = ()
    coefficients: tuple[float, ...] = ()
    intercept: float = 0.0
    residual_variance: float
    criterion: float
    cost: float
    budget: float
    path: tuple[PathStep, ...] = ()
    lambda_: Optional[float] = Field(default=None, alias="lambda")
    bisection_iters: Optional[int] = None
    converged: bool = True
    diagnostics: dict[str, Any] = Field(default_factory=dict)
    sweep: tuple[SweepPoint, ...] = ()

    @property
    def n(self) -> int:
        return self.size.effective_n

    @property
    def k(self) -> int:
        """Number of collectable covariates selected."""
        return len(self.selected_names)

    @property
    def rmse(self) -> float:
        return math.sqrt(self.criterion)

    @property
    def cost_over_budget(self) -> float:
        if self.budget <= 0:
            return 1.0
        return self.cost / self.budget

    def to_json(self) -> dict[str, Any]:
        """Machine-readable selection (sweep and diagnostics excluded)."""
        data: dict[str, Any] = dict(self.size.to_json())
        data.update(
            {
                "selected": list(self.selected_names),
                "criterion": self.criterion,
                "rmse": self.rmse,
                "cost": self.cost,
                "cost_over_budget": self.cost_over_budget,
                "path": [step.model_dump() for step in self.path],
            }
        )
        if self.lambda_ is not None:
            data["lambda"] = self.lambda_
            data["bisection_iters"] = self.bisection_iters
        return data


class DesignReport(BaseModel):
    """One row of a method comparison table."""

    method: str
    selection: Optional[Selection] = None
    n: int
    k: int
    cost_over_budget: float
    rmse: float
    eqb: Optional[float] = None
    relative_eqb: Optional[float] = None

    @classmethod
    def from_selection(
        cls,
        selection: Selection,
        eqb: Optional[float] = None,
        reference_budget: Optional[float] = None,
    ) -> DesignReport:
        relative = None
        if eqb is not None and reference_budget:
            relative = eqb / reference_budget
        return cls(
            method=selection.method,
            selection=selection,
            n=selection.n,
            k=selection.k,
            cost_over_budget=selection.cost_over_budget,
            rmse=selection.rmse,
            eqb=eqb,
            relative_eqb=relative,
        )

    def to_json(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "n": self.n,
            "k": self.k,
            "cost_over_budget": self.cost_over_budget,
            "rmse": self.rmse,
            "eqb": self.eqb,
            "relative_eqb": self.relative_eqb,
        }


class RunManifest(BaseModel):
    """Metadata for a single command run, for reproducibility."""

    run_id: str
    command: str
    version: str
    seed: Optional[int] = None
    input_hashes: dict[str, str] = Field(default_factory=dict)
    arguments: dict[str, Any] = Field(default_factory=dict)
    config_snapshot: dict[str, Any] = Field(default_factory=dict)
    timing: dict[str, float] = Field(default_factory=dict)

    def to_json(self, include_timing: bool = False) -> dict[str, Any]:
        """Manifest block; run id and timing vary between runs and are left out by default."""
        exclude = set() if include_timing else {"timing", "run_id"}
        return self.model_dump(mode="json", exclude=exclude)
