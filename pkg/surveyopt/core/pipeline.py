"""Design pipeline: load data and costs, run the design methods, write reports."""

from __future__ import annotations

import time
from pathlib import Path
from typing import Any, Optional

import pandas as pd
import structlog
from pydantic import BaseModel, ConfigDict, Field

from surveyopt import __version__
from surveyopt.core.config import Settings
from surveyopt.core.errors import TargetUnachievableError
from surveyopt.core.logging import bind_run_context
from surveyopt.core.types import DesignReport, Method, RunManifest, Selection
from surveyopt.core.utils import (
    ensure_dir,
    generate_run_id,
    hash_file,
    load_json,
    parse_range,
    save_json,
)
from surveyopt.cost.grid import Clusters, Individuals, SizeGrid
from surveyopt.cost.model import CostModel, load_cost_model
from surveyopt.cost.presets import PRESET_NAMES, preset, reference_design
from surveyopt.data.groups import GroupSpec, groups_from_names
from surveyopt.data.sample import PreSample, load_csv, studentize
from surveyopt.data.stacking import stack_multivariate
from surveyopt.evaluation.eqb import EqbResult, equivalent_budget, experiment_selection
from surveyopt.evaluation.kfold import KFoldReport, kfold_evaluate
from surveyopt.selectors.base import DesignProblem
from surveyopt.selectors.registry import SelectorRegistry

logger = structlog.get_logger()


class DesignRequest(BaseModel):
    """Inputs of a design run, as given on the command line."""

    data: Path
    outcomes: list[str]
    cost: str
    budget: Optional[float] = Field(default=None, gt=0)
    grid: Optional[str] = None
    clusters: Optional[str] = None
    per_cluster: Optional[str] = None
    methods: list[str] = Field(default_factory=list)
    force: list[str] = Field(default_factory=list)
    exclude: list[str] = Field(default_factory=list)
    groups: Optional[Path] = None
    stack: bool = False
    reference_n: Optional[int] = Field(default=None, ge=1)

    def arguments(self) -> dict[str, Any]:
        return self.model_dump(mode="json")


class PreparedDesign(BaseModel):
    """A loaded design problem and what is known about its reference experiment."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    problem: DesignProblem
    reference: Optional[Individuals | Clusters] = None
    input_hashes: dict[str, str] = Field(default_factory=dict)

    @property
    def sample(self) -> PreSample:
        return self.problem.sample

    @property
    def budget(self) -> float:
        return self.problem.budget


class DesignOutcome(BaseModel):
    """Reports of a design run and where they were written."""

    reports: list[DesignReport]
    manifest: RunManifest
    output_dir: Path


def _load_groups(path: Path) -> list[list[str]]:
    if not path.exists():
        raise FileNotFoundError(f"Groups file not found: {path}")
    raw = load_json(path)
    if not isinstance(raw, list) or not all(
        isinstance(g, list) and all(isinstance(name, str) for name in g) for g in raw
    ):
        raise ValueError("groups file must hold a JSON list of covariate-name lists")
    return raw


def _resolve_cost(
    cost: str, sample: PreSample
) -> tuple[CostModel, Optional[float], Optional[SizeGrid], Optional[str]]:
    """Cost model, preset budget, preset grid and preset name for a ``--cost`` value."""
    if cost in PRESET_NAMES:
        chosen = preset(cost, n_covariates=sample.n_sources)
        return chosen.model, chosen.budget, chosen.grid, cost
    path = Path(cost)
    if path.suffix.lower() == ".json" or path.exists():
        model = load_cost_model(path)
        return model, model.budget, None, None
    raise ValueError(
        f"Unknown cost preset: {cost}. Available: {', '.join(PRESET_NAMES)} or a JSON file"
    )


def _resolve_grid(request: DesignRequest, preset_grid: Optional[SizeGrid]) -> SizeGrid:
    if request.grid and (request.clusters or request.per_cluster):
        raise ValueError("use either --grid or --clusters/--per-cluster, not both")
    if request.grid:
        return SizeGrid.parse(request.grid)
    if request.clusters or request.per_cluster:
        if not (request.clusters and request.per_cluster):
            raise ValueError("--clusters and --per-cluster must be given together")
        return SizeGrid.clusters(parse_range(request.clusters), parse_range(request.per_cluster))
    if preset_grid is None:
        raise ValueError("a size grid is required (--grid or --clusters/--per-cluster)")
    return preset_grid


class DesignPipeline:
    """Orchestrates the design commands.

    Each run gets an id and an output directory (``--out`` or
    ``<output_dir>/<run_id>``). Reports embed a manifest without timing so that re-runs
    write identical files; ``manifest.json`` adds the timings.
    """

    def __init__(self, settings: Optional[Settings] = None, output_dir: Optional[Path] = None):
        self.settings = settings or Settings()
        self.run_id = generate_run_id()
        self._output_dir = output_dir
        self.timing: dict[str, float] = {}
        bind_run_context(run_id=self.run_id)
        logger.info("Pipeline initialized", threads=self.settings.threads)

    @property
    def run_dir(self) -> Path:
        """Directory for this run's outputs."""
        if self._output_dir is not None:
            return ensure_dir(Path(self._output_dir))
        return ensure_dir(Path(self.settings.output_dir) / self.run_id)

    def _timed(self, label: str, start: float) -> None:
        self.timing[label] = round(time.perf_counter() - start, 4)

    # ── Loading ──────────────────────────────────────────────────────

    def prepare(self, request: DesignRequest) -> PreparedDesign:
        """Load the sample, groups, cost model and grid of a request."""
        start = time.perf_counter()
        if not request.outcomes:
            raise ValueError("at least one outcome column is required")
        if len(request.outcomes) > 1 and not request.stack:
            raise ValueError("several outcomes need --stack")

        sample = load_csv(request.data, request.outcomes)
        hashes = {"data": hash_file(request.data)}
        if request.exclude:
            sample = sample.drop_covariates(request.exclude)
            logger.info("Excluded covariates", names=request.exclude)
        if self.settings.studentize:
            sample = studentize(sample)

        name_groups = None
        if request.groups is not None:
            name_groups = _load_groups(request.groups)
            hashes["groups"] = hash_file(request.groups)
        groups: GroupSpec = groups_from_names(sample, name_groups, request.force)
        if request.stack:
            sample, groups = stack_multivariate(sample, groups)

        model, preset_budget, preset_grid, preset_name = _resolve_cost(request.cost, sample)
        if preset_name is None:
            hashes["cost"] = hash_file(request.cost)
        budget = request.budget if request.budget is not None else preset_budget
        if budget is None:
            raise ValueError("no budget given: pass --budget or use a cost model with one")
        grid = _resolve_grid(request, preset_grid)

        reference: Optional[Individuals | Clusters] = None
        if request.reference_n is not None:
            reference = Individuals(n=request.reference_n)
        elif preset_name is not None:
            reference = reference_design(preset_name, sample.n_sources).size

        problem = DesignProblem(sample=sample, groups=groups, model=model, budget=budget, grid=grid)
        self._timed("prepare_seconds", start)
        logger.info(
            "Design problem loaded",
            rows=sample.n_rows,
            covariates=sample.n_covariates,
            groups=groups.p,
            budget=budget,
            grid=grid.describe(),
        )
        return PreparedDesign(problem=problem, reference=reference, input_hashes=hashes)

    def manifest(
        self, command: str, request: DesignRequest | dict[str, Any], hashes: dict[str, str]
    ) -> RunManifest:
        arguments = request.arguments() if isinstance(request, DesignRequest) else request
        return RunManifest(
            run_id=self.run_id,
            command=command,
            version=__version__,
            seed=self.settings.seed,
            input_hashes=hashes,
            arguments=arguments,
            config_snapshot=self.settings.snapshot(),
            timing=self.timing,
        )

    def _methods(self, request: DesignRequest) -> list[str]:
        return request.methods or list(self.settings.methods)

    # ── Commands ─────────────────────────────────────────────────────

    def design(self, request: DesignRequest) -> DesignOutcome:
        """Run every requested method and write selections plus a comparison table."""
        total_start = time.perf_counter()
        prepared = self.prepare(request)
        problem = prepared.problem

        experiment: Optional[Selection] = None
        if prepared.reference is not None:
            experiment = experiment_selection(problem, prepared.reference)

        reports: list[DesignReport] = []
        if experiment is not None:
            reports.append(
                DesignReport.from_selection(experiment, experiment.cost, problem.budget)
            )

        for method in self._methods(request):
            start = time.perf_counter()
            selector = SelectorRegistry.create(method, self.settings)
            selection = selector.design(problem, threads=self.settings.threads)
            eqb = None
            if experiment is not None:
                eqb = self._eqb_or_none(prepared, method, experiment.criterion)
            reports.append(DesignReport.from_selection(selection, eqb, problem.budget))
            self._timed(f"{selector.method_name}_seconds", start)

        self._timed("total_seconds", total_start)
        manifest = self.manifest("design", request, prepared.input_hashes)
        self._write_design(prepared, reports, manifest)
        return DesignOutcome(reports=reports, manifest=manifest, output_dir=self.run_dir)

    def _eqb_or_none(
        self, prepared: PreparedDesign, method: str, target: float
    ) -> Optional[float]:
        try:
            return self._eqb(prepared, method, target).eqb
        except TargetUnachievableError as exc:
            logger.warning("EQB not reached under the cap", method=method, error=str(exc))
            return None

    def _eqb(self, prepared: PreparedDesign, method: str, target: float) -> EqbResult:
        problem = prepared.problem
        return equivalent_budget(
            problem.sample,
            problem.groups,
            problem.model,
            problem.grid,
            method,
            target,
            reference_budget=problem.budget,
            settings=self.settings,
            threads=self.settings.threads,
        )

    def equivalent_budgets(
        self, request: DesignRequest, target_rmse: Optional[float] = None
    ) -> tuple[list[EqbResult], RunManifest]:
        """EQB of every method against a target RMSE or the reference experiment."""
        total_start = time.perf_counter()
        prepared = self.prepare(request)
        if target_rmse is not None:
            if target_rmse <= 0:
                raise ValueError(f"target RMSE must be positive, got {target_rmse}")
            target = target_rmse**2
        elif request.reference_n is not None and prepared.reference is not None:
            target = experiment_selection(prepared.problem, prepared.reference).criterion
        else:
            raise ValueError("pass --target or --reference-n")

        results = [self._eqb(prepared, method, target) for method in self._methods(request)]
        self._timed("total_seconds", total_start)
        manifest = self.manifest("eqb", request, prepared.input_hashes)
        save_json(
            {
                "manifest": manifest.to_json(),
                "target_criterion": target,
                "reference_budget": prepared.budget,
                "rows": [r.to_json() for r in results],
            },
            self.run_dir / "eqb.json",
        )
        save_json(manifest.to_json(include_timing=True), self.run_dir / "manifest.json")
        return results, manifest

    def kfold(
        self, request: DesignRequest, folds: int, seed: int
    ) -> tuple[list[KFoldReport], RunManifest]:
        """Out-of-sample evaluation of every method."""
        total_start = time.perf_counter()
        prepared = self.prepare(request)
        problem = prepared.problem
        reports = [
            kfold_evaluate(
                problem.sample,
                problem.groups,
                problem.model,
                problem.budget,
                problem.grid,
                method,
                folds=folds,
                seed=seed,
                reference=prepared.reference,
                settings=self.settings,
                threads=self.settings.threads,
            )
            for method in self._methods(request)
        ]
        self._timed("total_seconds", total_start)
        manifest = self.manifest("evaluate", request, prepared.input_hashes)
        manifest = manifest.model_copy(update={"seed": seed})
        save_json(
            {"manifest": manifest.to_json(), "rows": [r.to_json() for r in reports]},
            self.run_dir / "kfold.json",
        )
        frame = pd.DataFrame(
            [{k: v for k, v in r.to_json().items() if k != "folds"} for r in reports]
        )
        frame.to_csv(self.run_dir / "kfold.csv", index=False, float_format="%.10g")
        save_json(manifest.to_json(include_timing=True), self.run_dir / "manifest.json")
        return reports, manifest

    # ── Output ───────────────────────────────────────────────────────

    def _write_design(
        self, prepared: PreparedDesign, reports: list[DesignReport], manifest: RunManifest
    ) -> None:
        run_dir = self.run_dir
        block = manifest.to_json()
        for report in reports:
            if report.selection is None or report.method == Method.EXPERIMENT.value:
                continue
            selection = report.selection
            data = {"method": selection.method, **selection.to_json(), "manifest": block}
            if self.settings.save_sweep:
                data["sweep"] = [
                    {**point.size.to_json(), "criterion": point.criterion, "k": point.k}
                    for point in selection.sweep
                ]
            save_json(data, run_dir / f"selection_{selection.method}.json")

        frame = pd.DataFrame([r.to_json() for r in reports])
        frame.to_csv(run_dir / "comparison.csv", index=False, float_format="%.10g")
        save_json(
            {
                "manifest": block,
                "budget": prepared.budget,
                "reference": prepared.reference.to_json() if prepared.reference else None,
                "drop_report": prepared.sample.drop_report.to_json(),
                "rows": [r.to_json() for r in reports],
            },
            run_dir / "report.json",
        )
        save_json(manifest.to_json(include_timing=True), run_dir / "manifest.json")
        logger.info("Reports written", output_dir=str(run_dir))
