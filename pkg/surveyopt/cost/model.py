"""Survey cost functions: flat, survey, clustered and blocked variants."""

from __future__ import annotations

import bisect
import math
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Annotated, Iterable, Literal, Optional, Sequence, Union

import numpy as np
import structlog
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeFloat,
    TypeAdapter,
    model_validator,
)

from surveyopt.cost.grid import Clusters, Individuals, SizeGrid, cluster_shape
from surveyopt.core.utils import load_json, save_json

logger = structlog.get_logger()

Size = Union[Individuals, Clusters]
Mask = Union[Sequence[bool], np.ndarray]

# Slack for floor() on products such as 0.14 * 350.
_FLOOR_EPS = 1e-9


class StepFunction(BaseModel):
    """Piecewise-constant function on (0, inf).

    Bands are (0, cutoffs[0]], (cutoffs[0], cutoffs[1]], ..., (cutoffs[-1], inf), so
    ``values`` holds one more entry than ``cutoffs``.
    """

    model_config = ConfigDict(frozen=True)

    cutoffs: tuple[float, ...] = ()
    values: tuple[NonNegativeFloat, ...]

    @model_validator(mode="after")
    def _check(self) -> StepFunction:
        if len(self.values) != len(self.cutoffs) + 1:
            raise ValueError(
                f"{len(self.cutoffs)} cutoffs need {len(self.cutoffs) + 1} values, "
                f"got {len(self.values)}"
            )
        if any(a >= b for a, b in zip(self.cutoffs, self.cutoffs[1:])):
            raise ValueError("step cutoffs must be strictly increasing")
        if self.cutoffs and self.cutoffs[0] <= 0:
            raise ValueError("step cutoffs must be positive")
        return self

    @classmethod
    def constant(cls, value: float) -> StepFunction:
        return cls(values=(value,))

    @classmethod
    def ladder(cls, width: float, increment: float, bands: int) -> StepFunction:
        """``increment * k`` on the band (width*(k-1), width*k], k = 1..bands.

        The last band is open to infinity.
        """
        return cls(
            cutoffs=tuple(width * k for k in range(1, bands)),
            values=tuple(increment * k for k in range(1, bands + 1)),
        )

    def __call__(self, x: float) -> float:
        return step_lookup(self, x)


def step_lookup(f: StepFunction, x: float) -> float:
    """Value of the band containing ``x``; bands are closed on the right."""
    if not x > 0:
        raise ValueError(f"step functions are defined for x > 0, got {x}")
    return f.values[bisect.bisect_left(f.cutoffs, x)]


class CostBreakdown(BaseModel):
    """Administration, training and interview components of a design's cost."""

    admin: float
    train: float
    interview: float

    @property
    def total(self) -> float:
        return self.admin + self.train + self.interview


def _as_size(size: Size | int) -> Size:
    if isinstance(size, (Individuals, Clusters)):
        return size
    if size <= 0:
        raise ValueError(f"sample size must be positive, got {size}")
    return Individuals(n=int(size))


def enumerator_count(lambda_: float, c: int, per_cluster: float = 1.0) -> int:
    """Enumerators hired: floor(lambda * c * per_cluster), at least one."""
    return max(1, math.floor(lambda_ * c * per_cluster + _FLOOR_EPS))


class CostModel(BaseModel, ABC):
    """Cost c(S, n) of collecting the outcome plus the covariates in S from n people.

    ``selection`` arguments are boolean vectors over the model's covariates.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    budget: Optional[NonNegativeFloat] = None

    n_covariates: int

    def _mask(self, selection: Mask) -> np.ndarray:
        mask = np.asarray(selection, dtype=bool)
        if mask.shape != (self.n_covariates,):
            raise ValueError(
                f"selection has length {mask.size}, cost model prices "
                f"{self.n_covariates} covariates"
            )
        return mask

    @abstractmethod
    def survey_time(self, selection: Mask) -> float | tuple[float, float]:
        """Interview time per respondent."""
        ...

    @abstractmethod
    def breakdown(self, selection: Mask, size: Size | int) -> CostBreakdown:
        """Cost components of collecting ``selection`` at ``size``."""
        ...

    def total_cost(self, selection: Mask, size: Size | int) -> float:
        return self.breakdown(selection, size).total

    def to_json(self) -> dict:
        return self.model_dump(mode="json", by_alias=True, exclude_none=True)


class FlatCost(CostModel):
    """Linear cost: ``unit_price`` per covariate per respondent."""

    variant: Literal["flat"] = "flat"
    unit_price: NonNegativeFloat = 1.0

    def survey_time(self, selection: Mask) -> float:
        return float(self._mask(selection).sum())

    def breakdown(self, selection: Mask, size: Size | int) -> CostBreakdown:
        n = _as_size(size).effective_n
        return CostBreakdown(
            admin=0.0, train=0.0, interview=n * self.survey_time(selection) * self.unit_price
        )


class SurveyCost(CostModel):
    """Administration + lumpy training + interview costs for individual surveys.

    c(S, n) = phi T^alpha + kappa(n) T + n (eta + p T), with T = tau0 + sum_j tau_j S_j.
    """

    variant: Literal["survey"] = "survey"
    phi: float = Field(gt=0)
    alpha: float = Field(gt=0, lt=1)
    kappa: StepFunction
    eta: NonNegativeFloat
    p: NonNegativeFloat
    tau0: NonNegativeFloat
    tau: tuple[NonNegativeFloat, ...]

    @model_validator(mode="before")
    @classmethod
    def _count_covariates(cls, data: object) -> object:
        if isinstance(data, dict) and "tau" in data and "n_covariates" not in data:
            data = {**data, "n_covariates": len(data["tau"])}
        return data

    @model_validator(mode="after")
    def _check_tau(self) -> SurveyCost:
        if len(self.tau) != self.n_covariates:
            raise ValueError(f"tau has {len(self.tau)} entries for {self.n_covariates} covariates")
        return self

    def survey_time(self, selection: Mask) -> float:
        return self.tau0 + float(np.dot(self.tau, self._mask(selection)))

    def _admin(self, t: float) -> float:
        return self.phi * t**self.alpha

    def breakdown(self, selection: Mask, size: Size | int) -> CostBreakdown:
        t = self.survey_time(selection)
        n = _as_size(size).effective_n
        return CostBreakdown(
            admin=self._admin(t),
            train=self.kappa(n) * t,
            interview=n * (self.eta + self.p * t),
        )


class ClusteredCost(SurveyCost):
    """Survey costs when c clusters of n_c respondents are interviewed.

    Training prices step in the enumerator count mu = floor(lambda c mu_n(n_c)), and the
    fixed interview cost is paid per enumerator.
    """

    variant: Literal["clustered"] = "clustered"  # type: ignore[assignment]
    lambda_: float = Field(alias="lambda", gt=0)
    mu_n: StepFunction = Field(default_factory=lambda: StepFunction.constant(1.0))

    def enumerators(self, size: Size | int) -> int:
        c, n_c = cluster_shape(_as_size(size))
        return enumerator_count(self.lambda_, c, self.mu_n(n_c))

    def breakdown(self, selection: Mask, size: Size | int) -> CostBreakdown:
        size = _as_size(size)
        t = self.survey_time(selection)
        c, n_c = cluster_shape(size)
        mu = self.enumerators(size)
        return CostBreakdown(
            admin=self._admin(t),
            train=self.kappa(mu) * t,
            interview=mu * self.eta + c * n_c * self.p * t,
        )


class CostBlock(BaseModel):
    """Prices of one collection channel in a blocked cost model."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    phi: float = Field(gt=0)
    alpha: float = Field(gt=0, lt=1)
    kappa: StepFunction
    lambda_: float = Field(alias="lambda", gt=0)
    mu_n: Optional[StepFunction] = None
    eta: NonNegativeFloat
    p: NonNegativeFloat
    respondents: Literal["individuals", "clusters"] = "individuals"

    def enumerators(self, c: int, n_c: int) -> int:
        per_cluster = self.mu_n(n_c) if self.mu_n is not None else 1.0
        return enumerator_count(self.lambda_, c, per_cluster)

    def respondent_count(self, c: int, n_c: int) -> int:
        return c if self.respondents == "clusters" else c * n_c


class BlockPartition(BaseModel):
    model_config = ConfigDict(frozen=True)

    low: tuple[int, ...] = ()
    high: tuple[int, ...] = ()


class BlockedCost(CostModel):
    """Two collection channels with separate prices.

    Covariates in ``blocks.low`` are collected by the low-cost channel; the outcome and the
    ``blocks.high`` covariates by the high-cost channel. The low channel's fixed interview
    cost is only paid when at least one low-cost covariate is selected.
    """

    variant: Literal["blocked"] = "blocked"
    tau0: NonNegativeFloat
    tau: tuple[NonNegativeFloat, ...]
    blocks: BlockPartition
    low: CostBlock
    high: CostBlock

    @model_validator(mode="before")
    @classmethod
    def _count_covariates(cls, data: object) -> object:
        if isinstance(data, dict) and "tau" in data and "n_covariates" not in data:
            data = {**data, "n_covariates": len(data["tau"])}
        return data

    @model_validator(mode="after")
    def _check_partition(self) -> BlockedCost:
        if len(self.tau) != self.n_covariates:
            raise ValueError(f"tau has {len(self.tau)} entries for {self.n_covariates} covariates")
        low, high = set(self.blocks.low), set(self.blocks.high)
        if low & high:
            raise ValueError(f"covariates in both blocks: {sorted(low & high)}")
        if low | high != set(range(self.n_covariates)):
            raise ValueError("block partition must cover every covariate exactly once")
        return self

    def survey_time(self, selection: Mask) -> tuple[float, float]:
        mask = self._mask(selection)
        tau = np.asarray(self.tau)
        low = list(self.blocks.low)
        high = list(self.blocks.high)
        t_low = float(np.dot(tau[low], mask[low])) if low else 0.0
        t_high = self.tau0 + (float(np.dot(tau[high], mask[high])) if high else 0.0)
        return t_low, t_high

    def breakdown(self, selection: Mask, size: Size | int) -> CostBreakdown:
        mask = self._mask(selection)
        t_low, t_high = self.survey_time(mask)
        c, n_c = cluster_shape(_as_size(size))
        mu_low = self.low.enumerators(c, n_c)
        mu_high = self.high.enumerators(c, n_c)
        collect_low = bool(mask[list(self.blocks.low)].any()) if self.blocks.low else False

        interview = mu_high * self.high.eta + (
            self.high.respondent_count(c, n_c) * self.high.p * t_high
        )
        if collect_low:
            interview += mu_low * self.low.eta + (
                self.low.respondent_count(c, n_c) * self.low.p * t_low
            )
        return CostBreakdown(
            admin=self.low.phi * t_low**self.low.alpha + self.high.phi * t_high**self.high.alpha,
            train=self.low.kappa(mu_low) * t_low + self.high.kappa(mu_high) * t_high,
            interview=interview,
        )


AnyCostModel = Annotated[
    Union[FlatCost, SurveyCost, ClusteredCost, BlockedCost], Field(discriminator="variant")
]
_COST_ADAPTER: TypeAdapter = TypeAdapter(AnyCostModel)


def parse_cost_model(data: dict) -> CostModel:
    """Build a cost model from its JSON form, dispatching on ``variant``."""
    return _COST_ADAPTER.validate_python(data)


def load_cost_model(path: str | Path) -> CostModel:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Cost model file not found: {path}")
    return parse_cost_model(load_json(path))


def save_cost_model(model: CostModel, path: str | Path) -> None:
    save_json(model.to_json(), path)


def selection_mask(n_covariates: int, indices: Iterable[int]) -> np.ndarray:
    """Boolean selection vector with the given indices set."""
    mask = np.zeros(n_covariates, dtype=bool)
    mask[list(indices)] = True
    return mask


def max_feasible_size(
    model: CostModel,
    selection: Mask,
    budget: float,
    grid: SizeGrid,
) -> Optional[Size]:
    """Largest grid size whose cost stays within ``budget``, or None."""
    best = None
    for size in grid:
        if model.total_cost(selection, size) <= budget:
            best = size
    return best


def cheapest_cost(model: CostModel, selection: Mask, grid: SizeGrid) -> float:
    """Lowest cost of ``selection`` over the grid."""
    return min(model.total_cost(selection, size) for size in grid)
