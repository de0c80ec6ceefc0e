"""LASSO and POST-LASSO designs with the penalty pinned by the budget."""

from __future__ import annotations

import threading
from typing import Literal, Optional, Sequence

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field

from surveyopt.core.config import Settings
from surveyopt.core.errors import InfeasibleBudgetError
from surveyopt.core.types import Method, Selection
from surveyopt.cost.grid import SizeGrid
from surveyopt.cost.model import CostModel
from surveyopt.data.groups import GroupSpec
from surveyopt.data.sample import ZERO_VARIANCE_TOL, PreSample
from surveyopt.regress.ols import fit_selection, least_squares, orthonormalize_group
from surveyopt.selectors.base import BaseSelector, DesignProblem, Size

logger = structlog.get_logger()

# Coefficients smaller than this are exact zeros when reading off the support.
SUPPORT_TOL = 1e-10

LassoMode = Literal["lasso", "post-lasso"]


def soft_threshold(rho: float, threshold: float) -> float:
    if rho > threshold:
        return rho - threshold
    if rho < -threshold:
        return rho + threshold
    return 0.0


class LassoFit(BaseModel):
    """Minimizer of (1/N)||y - X gamma||^2 + lambda ||gamma||_1."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, populate_by_name=True)

    lambda_: float = Field(alias="lambda", ge=0)
    coefficients: np.ndarray
    support: tuple[int, ...]
    objective: float
    converged: bool = True
    sweeps: int = 0


def coordinate_descent(
    gram: np.ndarray,
    corr: np.ndarray,
    lambda_: float,
    start: Optional[np.ndarray] = None,
    tol: float = 1e-8,
    max_sweeps: int = 10_000,
) -> tuple[np.ndarray, bool, int]:
    """Cyclic coordinate descent on the Gram form of the LASSO objective.

    ``gram`` is X'X/N and ``corr`` is X'y/N. Each coordinate update is
    soft(rho_j, lambda/2) / gram_jj. Stops when no coefficient moves by ``tol`` or more
    in a full sweep.
    """
    q = corr.shape[0]
    coef = np.zeros(q) if start is None else np.array(start, dtype=np.float64)
    g_coef = gram @ coef
    diag = np.diag(gram)
    half = lambda_ / 2.0
    for sweep in range(1, max_sweeps + 1):
        max_change = 0.0
        for j in range(q):
            if diag[j] <= 0:
                continue
            old = coef[j]
            rho = corr[j] - g_coef[j] + diag[j] * old
            new = soft_threshold(rho, half) / diag[j]
            if new != old:
                g_coef += gram[:, j] * (new - old)
                coef[j] = new
                max_change = max(max_change, abs(new - old))
        if max_change < tol:
            return coef, True, sweep
    return coef, False, max_sweeps


class LassoData(BaseModel):
    """Centered, unit-variance candidate columns and outcome the LASSO runs on.

    Forced covariates are partialled out of both the outcome and the candidates first.
    ``candidates[t]`` is the sample column behind working column t, ``scales[t]`` the
    divisor applied to it.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    columns: np.ndarray
    outcome: np.ndarray
    candidates: tuple[int, ...]
    scales: np.ndarray
    gram: np.ndarray
    corr: np.ndarray

    @classmethod
    def from_sample(
        cls, sample: PreSample, forced: Sequence[int] = (), rescale: bool = True
    ) -> LassoData:
        x = sample.centered_covariates
        y = sample.centered_outcome
        n = sample.n_rows
        forced = sorted(set(forced))
        candidates = [j for j in range(sample.n_covariates) if j not in set(forced)]
        xs = x[:, candidates]
        if forced:
            basis, _ = orthonormalize_group(x[:, forced])
            y = y - basis @ (basis.T @ y) / n
            xs = xs - basis @ (basis.T @ xs) / n

        variances = (xs**2).mean(axis=0)
        keep = np.flatnonzero(variances >= ZERO_VARIANCE_TOL)
        if len(keep) < len(candidates):
            logger.debug(
                "Candidates explained by forced covariates dropped",
                columns=[candidates[t] for t in range(len(candidates)) if t not in set(keep)],
            )
        xs = xs[:, keep]
        candidates = [candidates[t] for t in keep]
        scales = np.sqrt(variances[keep]) if rescale else np.ones(len(keep))
        xs = xs / scales
        return cls(
            columns=xs,
            outcome=y,
            candidates=tuple(candidates),
            scales=scales,
            gram=xs.T @ xs / n,
            corr=xs.T @ y / n,
        )

    @property
    def n_rows(self) -> int:
        return self.columns.shape[0]

    @property
    def lambda_max(self) -> float:
        """Smallest penalty with an empty support."""
        return 2.0 * float(np.max(np.abs(self.corr))) if self.corr.size else 0.0

    def residuals(self, coefficients: np.ndarray) -> np.ndarray:
        return self.outcome - self.columns @ coefficients

    def fit(
        self,
        lambda_: float,
        start: Optional[np.ndarray] = None,
        tol: float = 1e-8,
        max_sweeps: int = 10_000,
    ) -> LassoFit:
        if lambda_ < 0:
            raise ValueError(f"lambda must be nonnegative, got {lambda_}")
        coef, converged, sweeps = coordinate_descent(
            self.gram, self.corr, lambda_, start, tol=tol, max_sweeps=max_sweeps
        )
        if not converged:
            logger.warning("LASSO did not converge", lambda_=lambda_, sweeps=sweeps)
        return self._wrap(lambda_, coef, converged, sweeps)

    def fit_unpenalized(self) -> LassoFit:
        """The lambda = 0 solution, computed as least squares."""
        coef, _ = least_squares(self.columns, self.outcome)
        return self._wrap(0.0, coef, True, 0)

    def _wrap(self, lambda_: float, coef: np.ndarray, converged: bool, sweeps: int) -> LassoFit:
        coef.setflags(write=False)
        residual = self.residuals(coef)
        objective = float(residual @ residual) / self.n_rows + lambda_ * float(np.abs(coef).sum())
        support = tuple(int(t) for t in np.flatnonzero(np.abs(coef) > SUPPORT_TOL))
        return LassoFit(
            lambda_=lambda_,
            coefficients=coef,
            support=support,
            objective=objective,
            converged=converged,
            sweeps=sweeps,
        )


def lasso_fit(
    sample: PreSample,
    lambda_: float,
    warm_start: Optional[np.ndarray] = None,
    tol: float = 1e-8,
    max_sweeps: int = 10_000,
) -> LassoFit:
    """LASSO on a studentized sample's centered covariates, coefficients in sample units."""
    if not sample.studentized:
        raise ValueError("lasso_fit expects a studentized sample")
    data = LassoData.from_sample(sample, rescale=False)
    if len(data.candidates) != sample.n_covariates:
        raise ValueError("sample has degenerate covariate columns")
    return data.fit(lambda_, warm_start, tol=tol, max_sweeps=max_sweeps)


def _reduce(numerator: int, depth: int) -> tuple[int, int]:
    while depth > 0 and numerator % 2 == 0:
        numerator //= 2
        depth -= 1
    return numerator, depth


class LassoPath:
    """Thread-safe cache of LASSO fits at the dyadic penalties bisection visits.

    A penalty is stored as ``lambda_max * a / 2**d``. Each fit is warm-started from its
    parent in the bisection tree, so its value depends on the penalty alone and not on
    which sizes asked for it first.
    """

    def __init__(self, data: LassoData, tol: float = 1e-8, max_sweeps: int = 10_000):
        self.data = data
        self.tol = tol
        self.max_sweeps = max_sweeps
        self._fits: dict[tuple[int, int], LassoFit] = {}
        self._zero: Optional[LassoFit] = None
        self._lock = threading.Lock()

    @property
    def lambda_max(self) -> float:
        return self.data.lambda_max

    def node(self, numerator: int, depth: int) -> LassoFit:
        key = _reduce(numerator, depth)
        with self._lock:
            cached = self._fits.get(key)
        if cached is not None:
            return cached

        a, d = key
        if d == 0:
            start = None
        else:
            lower, upper = _reduce(a - 1, d), _reduce(a + 1, d)
            parent = lower if lower[1] == d - 1 else upper
            start = None if parent[0] == 0 else self.node(*parent).coefficients
        lambda_ = self.lambda_max * a / 2**d
        fit = self.data.fit(lambda_, start, tol=self.tol, max_sweeps=self.max_sweeps)
        with self._lock:
            self._fits.setdefault(key, fit)
            return self._fits[key]

    def unpenalized(self) -> LassoFit:
        with self._lock:
            if self._zero is None:
                self._zero = self.data.fit_unpenalized()
            return self._zero


class LassoSelector(BaseSelector):
    """LASSO support chosen so its collection cost comes as close to the budget as possible.

    ``mode="lasso"`` scores the penalized fit; ``mode="post-lasso"`` refits OLS on the
    selected covariates.
    """

    def __init__(self, mode: LassoMode = "lasso", settings: Optional[Settings] = None):
        super().__init__(settings)
        if mode not in ("lasso", "post-lasso"):
            raise ValueError(f"Unknown LASSO mode: {mode}. Available: lasso, post-lasso")
        self.mode = mode

    @property
    def method_name(self) -> str:
        return Method.LASSO.value if self.mode == "lasso" else Method.POST_LASSO.value

    def prepare(self, problem: DesignProblem) -> LassoPath:
        sample = problem.sample
        forced = problem.groups.forced
        data = LassoData.from_sample(
            sample, forced, rescale=bool(forced) or not sample.studentized
        )
        logger.info(
            "LASSO data prepared",
            mode=self.mode,
            candidates=len(data.candidates),
            forced=len(forced),
            lambda_max=data.lambda_max,
        )
        return LassoPath(
            data, tol=self.settings.lasso_tol, max_sweeps=self.settings.lasso_max_sweeps
        )

    def _indices(self, state: LassoPath, problem: DesignProblem, fit: LassoFit) -> tuple[int, ...]:
        chosen = {state.data.candidates[t] for t in fit.support}
        return tuple(sorted(chosen | set(problem.groups.forced)))

    def select_at(self, state: LassoPath, problem: DesignProblem, size: Size) -> Selection:
        budget = problem.budget
        forced = problem.groups.forced
        empty_cost = problem.cost(forced, size)
        if empty_cost > budget:
            raise InfeasibleBudgetError(
                f"budget below outcome-only cost at this n ({size})",
                budget=budget,
                cheapest=empty_cost,
            )

        best = state.node(1, 0)
        best_cost = empty_cost
        iterations = 0
        everything = tuple(sorted(set(state.data.candidates) | set(forced)))
        if state.lambda_max <= 0:
            pass
        elif problem.cost(everything, size) <= budget:
            best = state.unpenalized()
            best_cost = problem.cost(self._indices(state, problem, best), size)
        else:
            lo, hi, depth = 0, 1, 0
            rtol = self.settings.bisection_budget_rtol
            for iterations in range(1, self.settings.bisection_max_iter + 1):
                mid, lo, hi, depth = lo + hi, 2 * lo, 2 * hi, depth + 1
                fit = state.node(mid, depth)
                cost = problem.cost(self._indices(state, problem, fit), size)
                if cost <= budget:
                    if cost >= best_cost:
                        best, best_cost = fit, cost
                    hi = mid
                    if budget > 0 and (budget - cost) / budget < rtol:
                        break
                else:
                    lo = mid

        return self._selection(state, problem, size, best, best_cost, iterations)

    def _selection(
        self,
        state: LassoPath,
        problem: DesignProblem,
        size: Size,
        fit: LassoFit,
        cost: float,
        iterations: int,
    ) -> Selection:
        sample = problem.sample
        data = state.data
        indices = self._indices(state, problem, fit)
        if self.mode == "post-lasso":
            refit = fit_selection(sample, indices)
            rv = refit.residual_variance
            coefficients = tuple(float(c) for c in refit.coefficients)
            intercept = refit.intercept
        else:
            residual = data.residuals(fit.coefficients)
            rv = float(residual @ residual) / data.n_rows
            coefficients, intercept = self._penalized_coefficients(sample, data, fit, indices)

        return Selection(
            method=self.method_name,
            size=size,
            selected_indices=indices,
            selected_names=problem.names(indices),
            coefficients=coefficients,
            intercept=intercept,
            residual_variance=rv,
            criterion=rv / size.effective_n,
            cost=cost,
            budget=problem.budget,
            lambda_=fit.lambda_,
            bisection_iters=iterations,
            converged=fit.converged,
            diagnostics={"support": len(fit.support), "sweeps": fit.sweeps},
        )

    @staticmethod
    def _penalized_coefficients(
        sample: PreSample, data: LassoData, fit: LassoFit, indices: tuple[int, ...]
    ) -> tuple[tuple[float, ...], float]:
        """Penalized coefficients in sample units; forced ones absorb the partialled fit."""
        gamma = dict.fromkeys(indices, 0.0)
        for t in fit.support:
            gamma[data.candidates[t]] = float(fit.coefficients[t] / data.scales[t])
        x = sample.centered_covariates
        y = sample.centered_outcome
        free = [j for j in indices if j in set(data.candidates)]
        partial = y - x[:, free] @ np.array([gamma[j] for j in free]) if free else y
        forced = [j for j in indices if j not in set(data.candidates)]
        if forced:
            coef, _ = least_squares(x[:, forced], partial)
            for j, c in zip(forced, coef):
                gamma[j] = float(c)
        beta = np.array([gamma[j] for j in indices])
        raw = sample.outcome - sample.covariates[:, list(indices)] @ beta
        return tuple(beta.tolist()), float(raw[: sample.n_rows // sample.blocks].mean())


def lasso_budget(
    sample: PreSample,
    groups: GroupSpec,
    model: CostModel,
    budget: float,
    size: Size,
    mode: LassoMode = "lasso",
    settings: Optional[Settings] = None,
) -> Selection:
    """LASSO selection at one size with lambda bisected against the budget."""
    problem = DesignProblem(
        sample=sample, groups=groups, model=model, budget=budget, grid=SizeGrid(sizes=(size,))
    )
    return LassoSelector(mode, settings).select(problem, size)


def lasso_design(
    sample: PreSample,
    groups: GroupSpec,
    model: CostModel,
    budget: float,
    grid: SizeGrid,
    mode: LassoMode = "lasso",
    threads: Optional[int] = None,
    settings: Optional[Settings] = None,
) -> Selection:
    """LASSO over the size grid: the size and selection with the smallest criterion."""
    problem = DesignProblem(sample=sample, groups=groups, model=model, budget=budget, grid=grid)
    return LassoSelector(mode, settings).design(problem, threads=threads)
