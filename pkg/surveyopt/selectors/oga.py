"""Budget-terminated group orthogonal greedy algorithm."""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict

from surveyopt.core.errors import InfeasibleBudgetError
from surveyopt.core.types import Method, PathStep, Selection
from surveyopt.cost.grid import SizeGrid
from surveyopt.cost.model import CostModel
from surveyopt.data.groups import GroupSpec
from surveyopt.data.sample import PreSample
from surveyopt.regress.ols import least_squares, orthonormalize_group
from surveyopt.selectors.base import BaseSelector, DesignProblem, Size

logger = structlog.get_logger()

# Residual variance below this fraction of the outcome variance counts as an exact fit.
ZERO_RESIDUAL_RTOL = 1e-14
# Argmax scores below this fraction of sqrt(N)*||r|| count as zero correlation.
ZERO_SCORE_RTOL = 1e-10


class GreedyStep(BaseModel):
    """State after committing ``group``: covariates collected so far and the OLS refit."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    group: int
    indices: tuple[int, ...]
    coefficients: np.ndarray
    rss: float


class GreedyPath(BaseModel):
    """Order in which OGA commits groups when the budget never binds.

    The order depends only on the sample, so one path serves every sample size: the
    selection at a size is the longest prefix whose collection cost fits the budget.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n_rows: int
    base_rss: float
    steps: tuple[GreedyStep, ...]
    stop_reason: str

    def prefix_groups(self, k: int) -> tuple[int, ...]:
        return tuple(step.group for step in self.steps[:k])

    def prefix_indices(self, k: int) -> tuple[int, ...]:
        return self.steps[k - 1].indices if k else ()

    def rss(self, k: int) -> float:
        return self.steps[k - 1].rss if k else self.base_rss


def greedy_path(sample: PreSample, groups: GroupSpec) -> GreedyPath:
    """Run the greedy group selection on centered data until it cannot improve.

    Each step picks the unselected group whose orthonormalized columns have the largest
    l2 inner product with the current residual (lowest index on ties), unions it into the
    selection and refits OLS on the original selected columns.
    """
    x = sample.centered_covariates
    y = sample.centered_outcome
    n = sample.n_rows
    bases = [orthonormalize_group(x[:, list(g)])[0] for g in groups.groups]

    base_rss = float(y @ y)
    residual = y
    rss = base_rss
    indices: tuple[int, ...] = ()
    steps: list[GreedyStep] = []
    stop_reason = "all groups selected"
    unselected = np.ones(groups.p, dtype=bool)

    while unselected.any():
        if rss <= ZERO_RESIDUAL_RTOL * base_rss:
            stop_reason = "residual is numerically zero"
            break
        scores = np.array(
            [
                np.linalg.norm(b.T @ residual) if free else -1.0
                for b, free in zip(bases, unselected)
            ]
        )
        best = int(np.argmax(scores))
        if scores[best] <= ZERO_SCORE_RTOL * math.sqrt(n) * math.sqrt(rss):
            stop_reason = "no remaining group correlates with the residual"
            break

        unselected[best] = False
        indices = tuple(sorted(set(indices) | set(groups.groups[best])))
        columns = x[:, list(indices)]
        coefficients, _ = least_squares(columns, y)
        residual = y - columns @ coefficients
        rss = float(residual @ residual)
        coefficients.setflags(write=False)
        steps.append(
            GreedyStep(group=best, indices=indices, coefficients=coefficients, rss=rss)
        )
        logger.debug("OGA step", step=len(steps), group=best, rss=rss)

    return GreedyPath(n_rows=n, base_rss=base_rss, steps=tuple(steps), stop_reason=stop_reason)


def longest_feasible_prefix(
    path: GreedyPath, problem: DesignProblem, size: Size
) -> Optional[int]:
    """Number of path steps affordable at ``size``, or None if even no covariate is.

    Prefix selections are nested and costs are monotone in the selection, so the first
    unaffordable step ends the walk; it is located by bisection.
    """
    if problem.cost((), size) > problem.budget:
        return None
    lo, hi = 0, len(path.steps)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if problem.cost(path.prefix_indices(mid), size) <= problem.budget:
            lo = mid
        else:
            hi = mid - 1
    return lo


def selection_from_path(
    path: GreedyPath, problem: DesignProblem, size: Size, k: int
) -> Selection:
    sample = problem.sample
    indices = path.prefix_indices(k)
    coefficients = path.steps[k - 1].coefficients if k else np.zeros(0)
    rv = path.rss(k) / path.n_rows
    raw = sample.outcome - sample.covariates[:, list(indices)] @ coefficients
    steps = tuple(
        PathStep(step=i + 1, group=step.group, rss=step.rss)
        for i, step in enumerate(path.steps[:k])
    )
    diagnostics = {"stop_reason": path.stop_reason if k == len(path.steps) else "budget"}
    return Selection(
        method=Method.OGA.value,
        size=size,
        selected_groups=path.prefix_groups(k),
        selected_indices=indices,
        selected_names=problem.names(indices),
        coefficients=tuple(float(c) for c in coefficients),
        intercept=float(raw[: sample.n_rows // sample.blocks].mean()),
        residual_variance=rv,
        criterion=rv / size.effective_n,
        cost=problem.cost(indices, size),
        budget=problem.budget,
        path=steps,
        diagnostics=diagnostics,
    )


class OgaSelector(BaseSelector):
    """Greedy group selection with the budget as its stopping rule."""

    @property
    def method_name(self) -> str:
        return Method.OGA.value

    def prepare(self, problem: DesignProblem) -> GreedyPath:
        path = greedy_path(problem.sample, problem.groups)
        logger.info(
            "Greedy path built",
            steps=len(path.steps),
            groups=problem.groups.p,
            stop_reason=path.stop_reason,
        )
        return path

    def select_at(self, state: GreedyPath, problem: DesignProblem, size: Size) -> Selection:
        k = longest_feasible_prefix(state, problem, size)
        if k is None:
            raise InfeasibleBudgetError(
                f"budget below outcome-only cost at this n ({size})",
                budget=problem.budget,
                cheapest=problem.cost((), size),
            )
        return selection_from_path(state, problem, size, k)


def oga_inner(
    sample: PreSample, groups: GroupSpec, model: CostModel, budget: float, size: Size
) -> Selection:
    """OGA selection at a single sample size."""
    problem = DesignProblem(
        sample=sample, groups=groups, model=model, budget=budget, grid=SizeGrid(sizes=(size,))
    )
    return OgaSelector().select(problem, size)


def oga_design(
    sample: PreSample,
    groups: GroupSpec,
    model: CostModel,
    budget: float,
    grid: SizeGrid,
    threads: Optional[int] = None,
) -> Selection:
    """OGA over the size grid: the size and selection with the smallest criterion."""
    problem = DesignProblem(sample=sample, groups=groups, model=model, budget=budget, grid=grid)
    return OgaSelector().design(problem, threads=threads)


def risk_gap(
    selection: Selection,
    truth: Sequence[float] | np.ndarray,
    sample: PreSample,
    groups: GroupSpec,
) -> tuple[float, float]:
    """Excess criterion of a selection over the true regression, and its finite-sample bound.

    ``truth`` holds the true coefficients in the sample's column units. The gap is
    (||Y - f_hat||_N^2 - ||Y - f||_N^2) / n and the bound 4 ||f||^2 / (n min(p, k)), with
    ||f|| the sum over groups of ||X_G gamma_G||_N (each column counted in the first group
    holding it). The bound is infinite when no group was selected.
    """
    truth = np.asarray(truth, dtype=np.float64)
    if truth.shape != (sample.n_covariates,):
        raise ValueError(f"truth has shape {truth.shape}, expected ({sample.n_covariates},)")
    x = sample.centered_covariates
    y = sample.centered_outcome
    n_rows = sample.n_rows
    n = selection.n

    indices = list(selection.selected_indices)
    columns = x[:, indices]
    coefficients, _ = least_squares(columns, y)
    fitted_rss = float(np.sum((y - columns @ coefficients) ** 2)) / n_rows
    true_rss = float(np.sum((y - x @ truth) ** 2)) / n_rows
    gap = (fitted_rss - true_rss) / n

    assigned: set[int] = set()
    norm = 0.0
    for members in groups.groups:
        own = [j for j in members if j not in assigned]
        assigned.update(own)
        if own:
            part = x[:, own] @ truth[own]
            norm += math.sqrt(float(part @ part) / n_rows)

    k = len(selection.selected_groups)
    if k == 0:
        return gap, math.inf
    bound = 4.0 * norm**2 / (n * min(groups.p, k))
    return gap, bound
