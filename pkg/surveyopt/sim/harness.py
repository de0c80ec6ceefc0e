"""Monte Carlo comparison of design methods on simulated data."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
import structlog
from pydantic import BaseModel, ConfigDict

from surveyopt.core.config import Settings
from surveyopt.core.errors import InfeasibleBudgetError, TargetUnachievableError
from surveyopt.core.types import Method, Selection
from surveyopt.core.utils import ensure_dir
from surveyopt.cost.grid import Individuals
from surveyopt.cost.model import CostModel
from surveyopt.data.groups import define_groups
from surveyopt.data.sample import PreSample, studentize
from surveyopt.evaluation.eqb import experiment_selection, search_budget
from surveyopt.regress.ols import residualize_outcome, treatment_effect
from surveyopt.selectors.base import DesignProblem
from surveyopt.selectors.registry import SelectorRegistry
from surveyopt.sim.designs import SimConfig, simulate_experiment, simulate_pre

logger = structlog.get_logger()

COLUMNS = [
    "scale",
    "method",
    "n_hat",
    "k_hat",
    "cost_over_budget",
    "rmse_criterion",
    "bias",
    "sd",
    "rmse_beta",
    "eqb",
]


class Draw(BaseModel):
    """One method's result in one replication."""

    replication: int
    method: str
    n: int = 0
    k: int = 0
    cost_over_budget: float = float("nan")
    rmse: float = float("nan")
    beta_hat: float = float("nan")
    eqb: Optional[float] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


class McRow(BaseModel):
    """Across-replication summary for one method."""

    scale: float
    method: str
    n_hat: float
    k_hat: float
    cost_over_budget: float
    rmse_criterion: float
    bias: float
    sd: float
    rmse_beta: float
    eqb: Optional[float] = None
    replications: int
    failures: int = 0


class McTable(BaseModel):
    """Monte Carlo results: summary rows plus the raw per-replication draws."""

    model_config = ConfigDict(frozen=True)

    rows: tuple[McRow, ...]
    draws: tuple[Draw, ...]

    def row(self, method: str) -> McRow:
        for row in self.rows:
            if row.method == method:
                return row
        raise KeyError(method)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([row.model_dump(include=set(COLUMNS)) for row in self.rows])[COLUMNS]

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        ensure_dir(path.parent)
        self.to_frame().to_csv(path, index=False, float_format="%.10g")
        return path


def summarize(draws: list[Draw], method: str, scale: float, beta_true: float) -> McRow:
    """Averages over the successful replications of one method."""
    done = [d for d in draws if d.method == method and d.ok]
    failures = sum(1 for d in draws if d.method == method and not d.ok)
    if not done:
        empty = dict.fromkeys(COLUMNS[2:-1], float("nan"))
        return McRow(scale=scale, method=method, replications=0, failures=failures, **empty)
    beta = np.array([d.beta_hat for d in done])
    eqbs = [d.eqb for d in done if d.eqb is not None]
    return McRow(
        scale=scale,
        method=method,
        n_hat=float(np.mean([d.n for d in done])),
        k_hat=float(np.mean([d.k for d in done])),
        cost_over_budget=float(np.mean([d.cost_over_budget for d in done])),
        rmse_criterion=float(np.mean([d.rmse for d in done])),
        bias=float(beta.mean() - beta_true),
        sd=float(beta.std(ddof=1)) if len(beta) > 1 else 0.0,
        rmse_beta=float(np.sqrt(np.mean((beta - beta_true) ** 2))),
        eqb=float(np.mean(eqbs)) if eqbs else None,
        replications=len(done),
        failures=failures,
    )


def _experimental_estimate(
    config: SimConfig,
    gamma: np.ndarray,
    selection: Selection,
    pre: PreSample,
    rng: np.random.Generator,
    donor: Optional[PreSample],
) -> float:
    y, d, x = simulate_experiment(config, gamma, selection.n, rng, donor)
    indices = list(selection.selected_indices)
    if config.estimator == "residualized":
        return treatment_effect(residualize_outcome(pre, indices, y, x[:, indices]), d)
    return treatment_effect(y, d, x[:, indices])


def run_replication(
    replication: int,
    seed: np.random.SeedSequence,
    config: SimConfig,
    model: CostModel,
    budget: float,
    gamma: np.ndarray,
    donor: Optional[PreSample] = None,
    settings: Optional[Settings] = None,
) -> list[Draw]:
    """Draw a pre-sample, design with every method and run one simulated experiment each."""
    settings = settings or Settings()
    rng = np.random.default_rng(seed)
    pre = simulate_pre(config, gamma, donor, rng)
    if settings.studentize:
        pre = studentize(pre)
    problem = DesignProblem(
        sample=pre, groups=define_groups(pre), model=model, budget=budget, grid=config.grid
    )

    reference = Individuals(n=config.reference_n) if config.reference_n else None
    experiment = experiment_selection(problem, reference) if reference is not None else None

    draws = []
    if config.include_experiment and experiment is not None:
        try:
            beta_hat = _experimental_estimate(config, gamma, experiment, pre, rng, donor)
            draws.append(
                Draw(
                    replication=replication,
                    method=Method.EXPERIMENT.value,
                    n=experiment.n,
                    k=experiment.k,
                    cost_over_budget=experiment.cost_over_budget,
                    rmse=experiment.rmse,
                    beta_hat=beta_hat,
                    eqb=experiment.cost,
                )
            )
        except ValueError as exc:
            failed = Draw(replication=replication, method=Method.EXPERIMENT.value, error=str(exc))
            draws.append(failed)

    for method in config.methods:
        selector = SelectorRegistry.create(method, settings)
        try:
            state = selector.prepare(problem)
            selection = selector.design(problem, threads=1, state=state)
            eqb = None
            if config.compute_eqb and experiment is not None:
                try:
                    eqb, _, _ = search_budget(
                        selector,
                        problem,
                        experiment.criterion,
                        cap=settings.eqb_cap_factor * budget,
                        rtol=settings.eqb_rtol,
                        threads=1,
                        hint=budget,
                    )
                except TargetUnachievableError:
                    eqb = None
            beta_hat = _experimental_estimate(config, gamma, selection, pre, rng, donor)
        except (InfeasibleBudgetError, ValueError) as exc:
            logger.warning(
                "Replication failed", replication=replication, method=method, error=str(exc)
            )
            draws.append(
                Draw(replication=replication, method=selector.method_name, error=str(exc))
            )
            continue
        draws.append(
            Draw(
                replication=replication,
                method=selector.method_name,
                n=selection.n,
                k=selection.k,
                cost_over_budget=selection.cost_over_budget,
                rmse=selection.rmse,
                beta_hat=beta_hat,
                eqb=eqb,
            )
        )
    return draws


def run_mc(
    config: SimConfig,
    model: CostModel,
    budget: float,
    donor: Optional[PreSample] = None,
    settings: Optional[Settings] = None,
    threads: Optional[int] = None,
) -> McTable:
    """Run ``config.replications`` independent replications and summarize them per method.

    Replication r draws from the r-th child of ``SeedSequence(config.seed)``, so the table
    does not depend on the number of threads.
    """
    settings = settings or Settings()
    threads = threads or settings.threads
    gamma = config.gamma()
    seeds = np.random.SeedSequence(config.seed).spawn(config.replications)
    logger.info(
        "Monte Carlo started",
        spec=config.spec.value,
        kappa=config.kappa,
        replications=config.replications,
        threads=threads,
    )

    def _run(r: int) -> list[Draw]:
        return run_replication(r, seeds[r], config, model, budget, gamma, donor, settings)

    if threads > 1 and config.replications > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            batches = list(pool.map(_run, range(config.replications)))
    else:
        batches = [_run(r) for r in range(config.replications)]
    draws = [d for batch in batches for d in batch]

    methods = ([Method.EXPERIMENT.value] if config.include_experiment else []) + [
        SelectorRegistry.create(m, settings).method_name for m in config.methods
    ]
    rows = tuple(summarize(draws, m, config.kappa, config.beta_true) for m in methods)
    for row in rows:
        logger.info(
            "Monte Carlo summary",
            method=row.method,
            n_hat=row.n_hat,
            k_hat=row.k_hat,
            bias=row.bias,
            sd=row.sd,
            failures=row.failures,
        )
    return McTable(rows=rows, draws=tuple(draws))
