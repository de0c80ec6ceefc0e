"""surveyopt CLI: choose the sample size and covariates of an RCT survey under a budget."""

from __future__ import annotations

import time
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, Optional

import numpy as np
import typer
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from surveyopt.core.config import Settings
from surveyopt.core.errors import InfeasibleBudgetError, TargetUnachievableError
from surveyopt.core.logging import configure_logging
from surveyopt.core.utils import split_names

app = typer.Typer(
    name="surveyopt",
    help="Budget-constrained covariate and sample-size selection for RCT surveys.",
    no_args_is_help=True,
)
cost_app = typer.Typer(help="Inspect and export calibrated cost models.", no_args_is_help=True)
app.add_typer(cost_app, name="cost")
console = Console()


def _fail(message: object, code: int) -> None:
    console.print(f"[red]Error: {message}[/red]")
    raise typer.Exit(code)


@contextmanager
def _exit_codes() -> Iterator[None]:
    """Map errors to exit codes: 1 missing file, 2 invalid input, 3 infeasible/unachievable."""
    try:
        yield
    except FileNotFoundError as exc:
        _fail(exc, 1)
    except (InfeasibleBudgetError, TargetUnachievableError) as exc:
        _fail(exc, 3)
    except ValueError as exc:
        _fail(exc, 2)


def _settings(config: Optional[str], **overrides) -> Settings:
    """Settings from YAML or environment; only flags that were passed override."""
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if config:
        if not Path(config).exists():
            _fail(f"Config file not found: {config}", 1)
        return Settings.from_yaml(config, **overrides)
    from dotenv import load_dotenv

    load_dotenv()
    return Settings(**overrides)


def _fmt(value: Optional[float], spec: str) -> str:
    return "-" if value is None else format(value, spec)


def _comparison_table(title: str, rows: list[dict]) -> Table:
    table = Table(title=title)
    for column in ("Method", "n", "|I|", "Cost/B", "RMSE", "EQB", "Rel. EQB"):
        table.add_column(column, justify="left" if column == "Method" else "right")
    for row in rows:
        table.add_row(
            row["method"],
            _fmt(row["n"], ",.0f"),
            _fmt(row["k"], ".1f"),
            _fmt(row["cost_over_budget"], ".5f"),
            _fmt(row["rmse"], ".5g"),
            _fmt(row.get("eqb"), ",.0f"),
            _fmt(row.get("relative_eqb"), ".3f"),
        )
    return table


# Options shared by the commands that read a pre-experimental sample.
DataOpt = typer.Option(..., "--data", "-d", help="Pre-experimental CSV file")
OutcomeOpt = typer.Option(..., "--outcome", help="Outcome column(s), comma separated")
CostOpt = typer.Option(..., "--cost", help="Cost model JSON file or preset name")
BudgetOpt = typer.Option(None, "--budget", help="Budget (overrides the cost model's)")
GridOpt = typer.Option(None, "--grid", help="Sample sizes as LO:HI:STEP")
ClustersOpt = typer.Option(None, "--clusters", help="Cluster counts as LO:HI:STEP")
PerClusterOpt = typer.Option(None, "--per-cluster", help="Cluster sizes as LO:HI:STEP")
MethodOpt = typer.Option(None, "--method", help="oga, lasso, post-lasso (comma list)")
ForceOpt = typer.Option(None, "--force", help="Covariates to always collect")
ExcludeOpt = typer.Option(None, "--exclude", help="Covariates to leave out")
GroupsOpt = typer.Option(None, "--groups", help="JSON list of covariate-name lists")
StackOpt = typer.Option(False, "--stack", help="Stack several outcomes into one regression")
ReferenceOpt = typer.Option(
    None, "--reference-n", "--reference", help="Sample size of the reference experiment"
)
SeedOpt = typer.Option(None, "--seed", help="Random seed")
ThreadsOpt = typer.Option(None, "--threads", help="Worker threads (default: all cores)")
OutOpt = typer.Option(None, "--out", help="Output directory")
ConfigOpt = typer.Option(None, "--config", help="Path to config YAML file")
VerboseOpt = typer.Option(False, "--verbose", "-v", help="Show solver progress")


def _request(
    data: str,
    outcome: str,
    cost: str,
    budget: Optional[float],
    grid: Optional[str],
    clusters: Optional[str],
    per_cluster: Optional[str],
    method: Optional[str],
    force: Optional[str],
    exclude: Optional[str],
    groups: Optional[str],
    stack: bool,
    reference_n: Optional[int],
):
    from surveyopt.core.pipeline import DesignRequest

    return DesignRequest(
        data=Path(data),
        outcomes=split_names(outcome),
        cost=cost,
        budget=budget,
        grid=grid,
        clusters=clusters,
        per_cluster=per_cluster,
        methods=split_names(method),
        force=split_names(force),
        exclude=split_names(exclude),
        groups=Path(groups) if groups else None,
        stack=stack,
        reference_n=reference_n,
    )


@app.command()
def design(
    data: str = DataOpt,
    outcome: str = OutcomeOpt,
    cost: str = CostOpt,
    budget: Optional[float] = BudgetOpt,
    grid: Optional[str] = GridOpt,
    clusters: Optional[str] = ClustersOpt,
    per_cluster: Optional[str] = PerClusterOpt,
    method: Optional[str] = MethodOpt,
    force: Optional[str] = ForceOpt,
    exclude: Optional[str] = ExcludeOpt,
    groups: Optional[str] = GroupsOpt,
    stack: bool = StackOpt,
    reference_n: Optional[int] = ReferenceOpt,
    seed: Optional[int] = SeedOpt,
    threads: Optional[int] = ThreadsOpt,
    out: Optional[str] = OutOpt,
    config: Optional[str] = ConfigOpt,
    verbose: bool = VerboseOpt,
):
    """Select the sample size and covariates with each method and compare them."""
    configure_logging(verbose=verbose, command="design", cost=cost, method=method)
    with _exit_codes():
        settings = _settings(config, seed=seed, threads=threads)
        request = _request(
            data, outcome, cost, budget, grid, clusters, per_cluster, method, force, exclude,
            groups, stack, reference_n,
        )
        from surveyopt.core.pipeline import DesignPipeline

        console.print(
            Panel.fit(
                f"[bold]surveyopt[/bold] - Survey design\n\n"
                f"Data: {request.data.name}\n"
                f"Cost: {request.cost}\n"
                f"Methods: {', '.join(request.methods or settings.methods)}",
                border_style="blue",
            )
        )
        pipeline = DesignPipeline(settings, Path(out) if out else None)
        outcome_ = pipeline.design(request)

    console.print(_comparison_table("Design comparison", [r.to_json() for r in outcome_.reports]))
    for report in outcome_.reports:
        if report.selection is not None and report.method != "experiment":
            selected = ", ".join(report.selection.selected_names) or "(none)"
            console.print(f"[bold]{report.method}[/bold]: {selected}")
    console.print(f"\n[green]Done![/green] Reports saved to: [bold]{outcome_.output_dir}[/bold]")


@app.command()
def eqb(
    data: str = DataOpt,
    outcome: str = OutcomeOpt,
    cost: str = CostOpt,
    budget: Optional[float] = BudgetOpt,
    grid: Optional[str] = GridOpt,
    clusters: Optional[str] = ClustersOpt,
    per_cluster: Optional[str] = PerClusterOpt,
    method: Optional[str] = MethodOpt,
    force: Optional[str] = ForceOpt,
    exclude: Optional[str] = ExcludeOpt,
    groups: Optional[str] = GroupsOpt,
    stack: bool = StackOpt,
    reference_n: Optional[int] = ReferenceOpt,
    target: Optional[float] = typer.Option(None, "--target", help="Target RMSE"),
    threads: Optional[int] = ThreadsOpt,
    out: Optional[str] = OutOpt,
    config: Optional[str] = ConfigOpt,
    verbose: bool = VerboseOpt,
):
    """Equivalent budget of each method for a target RMSE or a reference experiment."""
    configure_logging(verbose=verbose, command="eqb", cost=cost, method=method)
    if target is None and reference_n is None:
        _fail("pass --target or --reference-n", 2)
    with _exit_codes():
        settings = _settings(config, threads=threads)
        request = _request(
            data, outcome, cost, budget, grid, clusters, per_cluster, method, force, exclude,
            groups, stack, reference_n,
        )
        from surveyopt.core.pipeline import DesignPipeline

        pipeline = DesignPipeline(settings, Path(out) if out else None)
        results, _ = pipeline.equivalent_budgets(request, target_rmse=target)

    table = Table(title="Equivalent budgets")
    for column in ("Method", "EQB", "Rel. EQB", "n", "|I|", "Searches"):
        table.add_column(column, justify="left" if column == "Method" else "right")
    for result in results:
        table.add_row(
            result.method,
            f"{result.eqb:,.0f}",
            _fmt(result.relative_eqb, ".3f"),
            f"{result.selection.n:,}",
            str(result.selection.k),
            str(result.searches),
        )
    console.print(table)
    console.print(f"\n[green]Done![/green] Reports saved to: [bold]{pipeline.run_dir}[/bold]")


@app.command()
def power(
    beta: float = typer.Option(..., "--beta", help="Treatment effect under the alternative"),
    sigma: float = typer.Option(1.0, "--sigma", help="Residual standard deviation"),
    n: int = typer.Option(..., "--n", help="Experimental sample size"),
    dbar: float = typer.Option(0.5, "--dbar", help="Treated share"),
    alpha: float = typer.Option(0.05, "--alpha", help="Test size"),
    target_power: Optional[float] = typer.Option(
        None, "--target-power", help="Also report required n and detectable effect"
    ),
    out: Optional[str] = OutOpt,
):
    """Power of the two-sided t-test for the treatment effect."""
    from surveyopt.core.utils import save_json
    from surveyopt.evaluation.metrics import (
        PowerSpec,
        minimum_detectable_effect,
        mse,
        power as power_of,
        required_sample_size,
    )

    with _exit_codes():
        spec = PowerSpec(beta=beta, sigma=sigma, n=n, dbar=dbar, alpha=alpha)
        report = {
            **spec.model_dump(),
            "power": power_of(spec),
            "mse": mse(sigma**2, n, dbar),
        }
        if target_power is not None:
            report["target_power"] = target_power
            report["minimum_detectable_effect"] = minimum_detectable_effect(
                sigma, n, target_power, dbar, alpha
            )
            if beta != 0:
                report["required_n"] = required_sample_size(
                    beta, sigma, target_power, dbar, alpha
                )

    console.print(f"Power: [bold]{report['power']:.6f}[/bold]")
    console.print(f"MSE:   {report['mse']:.6g}")
    if "minimum_detectable_effect" in report:
        console.print(f"Minimum detectable effect: {report['minimum_detectable_effect']:.6g}")
    if "required_n" in report:
        console.print(f"Required n: {report['required_n']:,}")
    if out:
        save_json(report, Path(out) / "power.json")


@app.command()
def simulate(
    spec: str = typer.Option("lin-sparse", "--spec", help="lin-sparse, lin-exp or exp"),
    kappa: str = typer.Option("0", "--kappa", help="Scale(s) of the coefficient boost"),
    reps: int = typer.Option(100, "--reps", help="Replications per scale"),
    seed: int = typer.Option(0, "--seed", help="Random seed"),
    n_covariates: int = typer.Option(36, "--n-covariates", help="Covariates M"),
    n_pre: int = typer.Option(1330, "--n-pre", help="Pre-experimental sample size"),
    sigma_eps: float = typer.Option(1.0, "--sigma-eps", help="Error standard deviation"),
    beta: Optional[float] = typer.Option(None, "--beta", help="True treatment effect"),
    cost: str = typer.Option("daycare", "--cost", help="Cost model JSON file or preset name"),
    budget: Optional[float] = BudgetOpt,
    grid: str = typer.Option("500:4000:10", "--grid", help="Sample sizes as LO:HI:STEP"),
    reference_n: Optional[int] = typer.Option(
        1330, "--reference-n", help="Reference experiment size for EQB"
    ),
    method: Optional[str] = MethodOpt,
    experiment: bool = typer.Option(False, "--experiment", help="Add the experiment row"),
    no_eqb: bool = typer.Option(False, "--no-eqb", help="Skip equivalent budgets"),
    estimator: str = typer.Option(
        "regression", "--estimator", help="regression or residualized treatment estimate"
    ),
    donor: Optional[str] = typer.Option(None, "--donor", help="CSV to resample covariates from"),
    donor_outcome: Optional[str] = typer.Option(
        None, "--donor-outcome", help="Outcome column of the donor CSV"
    ),
    threads: Optional[int] = ThreadsOpt,
    out: Optional[str] = OutOpt,
    config: Optional[str] = ConfigOpt,
    verbose: bool = VerboseOpt,
):
    """Monte Carlo comparison of OGA, LASSO and POST-LASSO on simulated surveys."""
    configure_logging(verbose=verbose, command="simulate", cost=cost, spec=spec)
    import pandas as pd

    from surveyopt.core.types import RunManifest
    from surveyopt.core.utils import ensure_dir, generate_run_id, hash_file, save_json
    from surveyopt.cost.grid import SizeGrid
    from surveyopt.cost.model import load_cost_model
    from surveyopt.cost.presets import PRESET_NAMES, preset
    from surveyopt.data.sample import load_csv
    from surveyopt.sim.designs import SimConfig, correlation_order
    from surveyopt.sim.harness import run_mc

    with _exit_codes():
        start = time.perf_counter()
        settings = _settings(config, threads=threads, seed=seed)
        hashes = {}
        donor_sample = None
        if donor:
            if not donor_outcome:
                raise ValueError("--donor needs --donor-outcome")
            donor_sample = load_csv(donor, [donor_outcome])
            n_covariates = donor_sample.n_covariates
            hashes["donor"] = hash_file(donor)

        if cost in PRESET_NAMES:
            chosen = preset(cost, n_covariates=n_covariates)
            model, model_budget = chosen.model, chosen.budget
        else:
            model = load_cost_model(cost)
            model_budget = model.budget
            hashes["cost"] = hash_file(cost)
        budget = budget if budget is not None else model_budget
        if budget is None:
            raise ValueError("no budget given: pass --budget or use a cost model with one")

        scales = [float(k) for k in split_names(kappa)]
        if not scales:
            raise ValueError("--kappa needs at least one value")
        base = dict(
            spec=spec,
            n_covariates=n_covariates,
            sigma_eps=sigma_eps,
            n_pre=n_pre,
            grid=SizeGrid.parse(grid),
            reference_n=reference_n,
            replications=reps,
            seed=seed,
            covariate_source="resample" if donor_sample is not None else "gaussian",
            methods=tuple(split_names(method) or settings.methods),
            include_experiment=experiment,
            compute_eqb=not no_eqb,
            estimator=estimator,
        )
        if donor_sample is not None:
            base["boost_order"] = correlation_order(donor_sample)
        if beta is not None:
            base["beta_true"] = beta

        tables = []
        for scale in scales:
            sim_config = SimConfig(kappa=scale, **base)
            tables.append(run_mc(sim_config, model, budget, donor_sample, settings))

        run_dir = ensure_dir(
            Path(out) if out else Path(settings.output_dir) / generate_run_id()
        )
        frame = pd.concat([t.to_frame() for t in tables], ignore_index=True)
        frame.to_csv(run_dir / "simulation.csv", index=False, float_format="%.10g")
        manifest = RunManifest(
            run_id=run_dir.name,
            command="simulate",
            version=_version(),
            seed=seed,
            input_hashes=hashes,
            arguments={
                "spec": spec, "kappa": scales, "reps": reps, "n_covariates": n_covariates,
                "n_pre": n_pre, "sigma_eps": sigma_eps, "beta": beta, "cost": cost,
                "budget": budget, "grid": grid, "reference_n": reference_n,
                "methods": list(base["methods"]), "experiment": experiment, "eqb": not no_eqb,
            },
            config_snapshot=settings.snapshot(),
            timing={"total_seconds": round(time.perf_counter() - start, 4)},
        )
        save_json(
            {
                "manifest": manifest.to_json(),
                "rows": [row.model_dump() for t in tables for row in t.rows],
            },
            run_dir / "simulation.json",
        )
        save_json(manifest.to_json(include_timing=True), run_dir / "manifest.json")

    table = Table(title=f"Monte Carlo ({spec}, {reps} replications)")
    for column in ("Scale", "Method", "n", "|I|", "Cost/B", "RMSE", "Bias", "SD", "RMSE(b)"):
        table.add_column(column, justify="left" if column == "Method" else "right")
    for record in frame.to_dict(orient="records"):
        table.add_row(
            f"{record['scale']:g}",
            record["method"],
            f"{record['n_hat']:,.0f}" if np.isfinite(record["n_hat"]) else "-",
            f"{record['k_hat']:.1f}",
            f"{record['cost_over_budget']:.5f}",
            f"{record['rmse_criterion']:.5g}",
            f"{record['bias']:.3g}",
            f"{record['sd']:.3g}",
            f"{record['rmse_beta']:.3g}",
        )
    console.print(table)
    console.print(f"\n[green]Done![/green] Results saved to: [bold]{run_dir}[/bold]")


@app.command()
def evaluate(
    data: str = DataOpt,
    outcome: str = OutcomeOpt,
    cost: str = CostOpt,
    budget: Optional[float] = BudgetOpt,
    grid: Optional[str] = GridOpt,
    clusters: Optional[str] = ClustersOpt,
    per_cluster: Optional[str] = PerClusterOpt,
    method: Optional[str] = MethodOpt,
    force: Optional[str] = ForceOpt,
    exclude: Optional[str] = ExcludeOpt,
    groups: Optional[str] = GroupsOpt,
    reference_n: Optional[int] = ReferenceOpt,
    folds: Optional[int] = typer.Option(None, "--folds", help="Number of folds"),
    seed: Optional[int] = SeedOpt,
    threads: Optional[int] = ThreadsOpt,
    out: Optional[str] = OutOpt,
    config: Optional[str] = ConfigOpt,
    verbose: bool = VerboseOpt,
):
    """K-fold out-of-sample evaluation: select on training folds, score on the held-out one."""
    configure_logging(verbose=verbose, command="evaluate", cost=cost, method=method)
    with _exit_codes():
        settings = _settings(config, threads=threads, seed=seed, folds=folds)
        request = _request(
            data, outcome, cost, budget, grid, clusters, per_cluster, method, force, exclude,
            groups, False, reference_n,
        )
        from surveyopt.core.pipeline import DesignPipeline

        pipeline = DesignPipeline(settings, Path(out) if out else None)
        reports, _ = pipeline.kfold(request, settings.folds, settings.seed)

    console.print(
        _comparison_table(f"{settings.folds}-fold evaluation", [r.to_json() for r in reports])
    )
    console.print(f"\n[green]Done![/green] Reports saved to: [bold]{pipeline.run_dir}[/bold]")


@cost_app.command("preset")
def cost_preset(
    name: str = typer.Option(
        ..., "--name", help="daycare, schoolgrants_baseline, schoolgrants_followup"
    ),
    n_covariates: Optional[int] = typer.Option(None, "--n-covariates", help="Covariates M"),
    out: Optional[str] = typer.Option(None, "--out", help="Write the model JSON here"),
):
    """Print or export a calibrated cost model."""
    from surveyopt.core.utils import dump_json
    from surveyopt.cost.model import save_cost_model
    from surveyopt.cost.presets import preset

    with _exit_codes():
        chosen = preset(name, n_covariates=n_covariates)
    if out:
        save_cost_model(chosen.model, out)
        console.print(f"[green]Done![/green] Cost model saved to: [bold]{out}[/bold]")
    else:
        console.print_json(dump_json(chosen.model.to_json()))
    console.print(f"Budget: {chosen.budget:,.2f}   Grid: {chosen.grid.describe()}")


@cost_app.command("show")
def cost_show(
    cost: str = CostOpt,
    n: Optional[int] = typer.Option(None, "--n", help="Individuals (individual designs)"),
    clusters: Optional[int] = typer.Option(None, "--clusters", help="Number of clusters"),
    per_cluster: Optional[int] = typer.Option(None, "--per-cluster", help="Cluster size"),
    k: Optional[int] = typer.Option(None, "--k", help="Collect the first k covariates"),
    select: Optional[str] = typer.Option(None, "--select", help="Covariate positions to collect"),
):
    """Cost breakdown (administration, training, interviews) of one design."""
    from surveyopt.cost.grid import Clusters, Individuals
    from surveyopt.cost.model import load_cost_model, selection_mask
    from surveyopt.cost.presets import PRESET_NAMES, preset

    with _exit_codes():
        if cost in PRESET_NAMES:
            chosen = preset(cost)
            model, budget = chosen.model, chosen.budget
        else:
            model = load_cost_model(cost)
            budget = model.budget
        if clusters is not None or per_cluster is not None:
            if clusters is None or per_cluster is None:
                raise ValueError("--clusters and --per-cluster must be given together")
            size = Clusters(c=clusters, n_c=per_cluster)
        elif n is not None:
            size = Individuals(n=n)
        else:
            raise ValueError("pass --n or --clusters with --per-cluster")
        if select:
            indices = [int(j) for j in split_names(select)]
        else:
            indices = list(range(model.n_covariates if k is None else k))
        if any(not 0 <= j < model.n_covariates for j in indices):
            raise ValueError(f"covariate positions must lie in [0, {model.n_covariates})")
        parts = model.breakdown(selection_mask(model.n_covariates, indices), size)

    table = Table(title=f"Cost of {len(indices)} covariates at {size}")
    table.add_column("Component")
    table.add_column("Cost", justify="right")
    table.add_row("Administration", f"{parts.admin:,.2f}")
    table.add_row("Training", f"{parts.train:,.2f}")
    table.add_row("Interviews", f"{parts.interview:,.2f}")
    table.add_row("[bold]Total[/bold]", f"[bold]{parts.total:,.2f}[/bold]")
    console.print(table)
    if budget:
        console.print(f"Cost/B: {parts.total / budget:.5f} (budget {budget:,.2f})")


def _version() -> str:
    from surveyopt import __version__

    return __version__


if __name__ == "__main__":
    app()
