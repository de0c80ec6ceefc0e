"""K-fold out-of-sample evaluation of design methods."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Any, Optional

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict

from surveyopt.core.config import Settings
from surveyopt.core.errors import TargetUnachievableError
from surveyopt.core.types import Selection
from surveyopt.cost.grid import Individuals, SizeGrid
from surveyopt.cost.model import CostModel
from surveyopt.data.groups import GroupSpec
from surveyopt.data.sample import PreSample, studentize
from surveyopt.evaluation.eqb import experiment_selection, search_budget
from surveyopt.selectors.base import DesignProblem, Size
from surveyopt.selectors.registry import SelectorRegistry

logger = structlog.get_logger()


class FoldResult(BaseModel):
    """Design chosen on the training folds and scored on the held-out one."""

    fold: int
    train_rows: int
    test_rows: int
    budget: float
    selection: Selection
    rmse: float
    eqb: Optional[float] = None
    relative_eqb: Optional[float] = None


class KFoldReport(BaseModel):
    """Per-fold results and their averages."""

    model_config = ConfigDict(frozen=True)

    method: str
    seed: int
    folds: tuple[FoldResult, ...]

    def _mean(self, values: list[Optional[float]]) -> Optional[float]:
        present = [v for v in values if v is not None]
        if not present:
            return None
        return float(np.mean(present))

    @property
    def n(self) -> float:
        return float(np.mean([f.selection.n for f in self.folds]))

    @property
    def k(self) -> float:
        return float(np.mean([f.selection.k for f in self.folds]))

    @property
    def cost_over_budget(self) -> float:
        return float(np.mean([f.selection.cost_over_budget for f in self.folds]))

    @property
    def rmse(self) -> float:
        return float(np.mean([f.rmse for f in self.folds]))

    @property
    def eqb(self) -> Optional[float]:
        return self._mean([f.eqb for f in self.folds])

    @property
    def relative_eqb(self) -> Optional[float]:
        return self._mean([f.relative_eqb for f in self.folds])

    def to_json(self) -> dict[str, Any]:
        return {
            "method": self.method,
            "n": self.n,
            "k": self.k,
            "cost_over_budget": self.cost_over_budget,
            "rmse": self.rmse,
            "eqb": self.eqb,
            "relative_eqb": self.relative_eqb,
            "folds": [
                {
                    "fold": f.fold,
                    "budget": f.budget,
                    "rmse": f.rmse,
                    "eqb": f.eqb,
                    "relative_eqb": f.relative_eqb,
                    **f.selection.to_json(),
                }
                for f in self.folds
            ],
        }


def fold_partition(n_rows: int, folds: int, seed: int) -> list[np.ndarray]:
    """Seeded random partition of row indices into ``folds`` near-equal parts."""
    if folds < 2:
        raise ValueError(f"need at least 2 folds, got {folds}")
    if folds > n_rows:
        raise ValueError(f"cannot split {n_rows} rows into {folds} folds")
    order = np.random.default_rng(seed).permutation(n_rows)
    return [np.sort(part) for part in np.array_split(order, folds)]


def holdout_criterion(
    selection: Selection, train: PreSample, sample: PreSample, rows: np.ndarray
) -> float:
    """Criterion of a training-sample design on held-out rows of ``sample``.

    The residuals use the training coefficients and intercept.
    """
    names = [train.covariate_names[j] for j in selection.selected_indices]
    columns = list(sample.indices_of(names))
    ratio = np.array(
        [
            train.column_scales[j] / sample.column_scales[c]
            for j, c in zip(selection.selected_indices, columns)
        ]
    )
    gamma = np.asarray(selection.coefficients) / ratio if columns else np.zeros(0)
    y = sample.outcome[rows]
    residual = y - selection.intercept - sample.covariates[np.ix_(rows, columns)] @ gamma
    return float(residual @ residual) / len(rows) / selection.n


def _fold_budget(
    model: CostModel, budget: float, grid: SizeGrid, n_total: int, n_train: int
) -> float:
    if all(isinstance(size, Individuals) for size in grid):
        everything = np.ones(model.n_covariates, dtype=bool)
        return model.total_cost(everything, Individuals(n=n_train))
    return budget * n_train / n_total


def kfold_evaluate(
    sample: PreSample,
    groups: GroupSpec,
    model: CostModel,
    budget: float,
    grid: SizeGrid,
    method: str,
    folds: int = 5,
    seed: int = 0,
    reference: Optional[Size] = None,
    settings: Optional[Settings] = None,
    threads: Optional[int] = None,
) -> KFoldReport:
    """Select on each union of ``folds - 1`` folds and score on the remaining one.

    With individual sample sizes the training budget is the cost of collecting every
    covariate at the training-sample length; with cluster sizes ``budget`` is scaled by
    the training share. When a ``reference`` size is given each fold also gets the EQB
    against the reference design, both scored on the held-out rows.
    """
    settings = settings or Settings()
    threads = threads or settings.threads
    parts = fold_partition(sample.n_rows, folds, seed)
    selector = SelectorRegistry.create(method, settings)

    def _run(fold: int) -> FoldResult:
        test = parts[fold]
        train_rows = np.sort(np.concatenate([p for i, p in enumerate(parts) if i != fold]))
        train = sample.subset(train_rows)
        kept = sample.indices_of(train.covariate_names)
        if settings.studentize:
            train = studentize(train)
        fold_budget = _fold_budget(model, budget, grid, sample.n_rows, len(train_rows))
        problem = DesignProblem(
            sample=train,
            groups=groups.restrict(kept),
            model=model,
            budget=fold_budget,
            grid=grid,
        )
        state = selector.prepare(problem)
        selection = selector.design(problem, threads=1, state=state)

        def _score(sel: Selection) -> float:
            return holdout_criterion(sel, train, sample, test)

        eqb = relative = None
        if reference is not None:
            target = _score(experiment_selection(problem, reference))
            try:
                eqb, _, _ = search_budget(
                    selector,
                    problem,
                    target,
                    cap=settings.eqb_cap_factor * fold_budget,
                    rtol=settings.eqb_rtol,
                    score=_score,
                    threads=1,
                    hint=fold_budget,
                )
                relative = eqb / fold_budget
            except TargetUnachievableError as exc:
                logger.warning("Fold EQB unachievable", fold=fold, error=str(exc))

        logger.debug("Fold done", fold=fold, n=selection.n, k=selection.k)
        return FoldResult(
            fold=fold,
            train_rows=len(train_rows),
            test_rows=len(test),
            budget=fold_budget,
            selection=selection,
            rmse=float(np.sqrt(_score(selection))),
            eqb=eqb,
            relative_eqb=relative,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=min(threads, folds)) as pool:
            results = list(pool.map(_run, range(folds)))
    else:
        results = [_run(fold) for fold in range(folds)]

    report = KFoldReport(method=selector.method_name, seed=seed, folds=tuple(results))
    logger.info("K-fold evaluation done", method=method, folds=folds, rmse=report.rmse)
    return report
