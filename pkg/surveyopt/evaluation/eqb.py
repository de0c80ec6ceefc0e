"""Equivalent budget: the cheapest budget whose optimized design meets a precision target."""

from __future__ import annotations

from typing import Any, Callable, Optional

import structlog
from pydantic import BaseModel

from surveyopt.core.config import Settings
from surveyopt.core.errors import InfeasibleBudgetError, TargetUnachievableError
from surveyopt.core.types import Method, Selection
from surveyopt.cost.grid import SizeGrid
from surveyopt.cost.model import CostModel
from surveyopt.data.groups import GroupSpec
from surveyopt.data.sample import PreSample
from surveyopt.regress.ols import fit_selection
from surveyopt.selectors.base import BaseSelector, DesignProblem, Size
from surveyopt.selectors.registry import SelectorRegistry

logger = structlog.get_logger()

Score = Callable[[Selection], float]


class EqbResult(BaseModel):
    """Outcome of an equivalent-budget search."""

    method: str
    target: float
    eqb: float
    reference_budget: Optional[float] = None
    relative_eqb: Optional[float] = None
    searches: int
    selection: Selection

    def to_json(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "target_criterion": self.target,
            "eqb": self.eqb,
            "relative_eqb": self.relative_eqb,
            "reference_budget": self.reference_budget,
            "searches": self.searches,
            "design": self.selection.to_json(),
        }


def _criterion(selection: Selection) -> float:
    return selection.criterion


def search_budget(
    selector: BaseSelector,
    problem: DesignProblem,
    target: float,
    cap: float,
    rtol: float = 1e-3,
    score: Score = _criterion,
    threads: Optional[int] = None,
    hint: Optional[float] = None,
) -> tuple[float, Selection, int]:
    """Bisect budgets in [cheapest design, cap] for the smallest one meeting ``target``.

    Every budget tried runs the selector's full design search. ``score`` maps the optimized
    design to the quantity compared against the target (its in-sample criterion unless
    given). A ``hint`` budget, typically the reference one, is tried before bisecting.
    Returns the budget, the design found there and the number of searches run.

    Raises:
        TargetUnachievableError: If even ``cap`` does not meet the target.
    """
    state = selector.prepare(problem)
    floor = problem.cheapest()
    searches = 0

    def _search_at(budget: float) -> Optional[Selection]:
        nonlocal searches
        searches += 1
        try:
            sel = selector.design(problem.with_budget(budget), threads=threads, state=state)
        except InfeasibleBudgetError:
            return None
        return sel if score(sel) <= target else None

    best = _search_at(floor)
    if best is not None:
        return floor, best, searches

    if cap <= floor:
        raise TargetUnachievableError(
            f"budget cap {cap:,.2f} is below the cheapest design ({floor:,.2f})",
            target=target,
            cap=cap,
        )
    best = _search_at(cap)
    if best is None:
        raise TargetUnachievableError(
            f"target criterion {target:.6g} is not met by {selector.method_name} "
            f"within the budget cap {cap:,.2f}",
            target=target,
            cap=cap,
        )

    lo, hi = floor, cap
    if hint is not None and floor < hint < cap:
        sel = _search_at(hint)
        if sel is None:
            lo = hint
        else:
            hi, best = hint, sel
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        sel = _search_at(mid)
        if sel is None:
            lo = mid
        else:
            hi, best = mid, sel
    logger.debug("EQB search done", method=selector.method_name, eqb=hi, searches=searches)
    return hi, best, searches


def equivalent_budget(
    sample: PreSample,
    groups: GroupSpec,
    model: CostModel,
    grid: SizeGrid,
    method: str,
    target_criterion: float,
    reference_budget: Optional[float] = None,
    settings: Optional[Settings] = None,
    threads: Optional[int] = None,
    score: Score = _criterion,
) -> EqbResult:
    """Smallest budget under which ``method`` reaches ``target_criterion``.

    The reference budget defaults to the cost model's own budget. Budgets above
    ``eqb_cap_factor`` times the reference budget are not searched.

    Raises:
        TargetUnachievableError: If the target is not met under the cap.
        ValueError: If there is no reference budget or the target is not positive.
    """
    settings = settings or Settings()
    if target_criterion <= 0:
        raise ValueError(f"target criterion must be positive, got {target_criterion}")
    reference = reference_budget if reference_budget is not None else model.budget
    if not reference:
        raise ValueError("an equivalent budget needs a reference budget")

    selector = SelectorRegistry.create(method, settings)
    problem = DesignProblem(sample=sample, groups=groups, model=model, budget=reference, grid=grid)
    eqb, selection, searches = search_budget(
        selector,
        problem,
        target_criterion,
        cap=settings.eqb_cap_factor * reference,
        rtol=settings.eqb_rtol,
        score=score,
        threads=threads,
        hint=reference,
    )
    logger.info("Equivalent budget", method=method, eqb=eqb, relative=eqb / reference)
    return EqbResult(
        method=selector.method_name,
        target=target_criterion,
        eqb=eqb,
        reference_budget=reference,
        relative_eqb=eqb / reference,
        searches=searches,
        selection=selection,
    )


def experiment_selection(problem: DesignProblem, size: Size) -> Selection:
    """The reference design: every candidate covariate collected at ``size``."""
    sample = problem.sample
    indices = tuple(range(sample.n_covariates))
    fit = fit_selection(sample, indices)
    return Selection(
        method=Method.EXPERIMENT.value,
        size=size,
        selected_indices=indices,
        selected_names=problem.names(indices),
        coefficients=tuple(float(c) for c in fit.coefficients),
        intercept=fit.intercept,
        residual_variance=fit.residual_variance,
        criterion=fit.residual_variance / size.effective_n,
        cost=problem.cost(indices, size),
        budget=problem.budget,
    )
