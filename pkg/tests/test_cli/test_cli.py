"""Tests for the surveyopt command line."""

from __future__ import annotations

import json

from typer.testing import CliRunner

from surveyopt.cli import app
from surveyopt.cost.model import SurveyCost, load_cost_model
from surveyopt.cost.presets import daycare

runner = CliRunner()


def test_power_command():
    """Test the power report."""
    result = runner.invoke(app, ["power", "--beta", "0.2", "--n", "800", "--target-power", "0.8"])
    assert result.exit_code == 0
    assert "Power:" in result.output
    assert "Required n" in result.output


def test_power_writes_json(tmp_path):
    """Test that --out saves the power report."""
    result = runner.invoke(app, ["power", "--beta", "0.0", "--n", "100", "--out", str(tmp_path)])
    assert result.exit_code == 0
    report = json.loads((tmp_path / "power.json").read_text(encoding="utf-8"))
    assert abs(report["power"] - 0.05) < 1e-9


def test_power_invalid_share():
    """Test that an invalid treated share exits with code 2."""
    result = runner.invoke(app, ["power", "--beta", "0.2", "--n", "100", "--dbar", "1.5"])
    assert result.exit_code == 2


def test_design_missing_data(tmp_path, cost_json):
    """Test that a missing data file exits with code 1."""
    result = runner.invoke(
        app,
        [
            "design",
            "--data", str(tmp_path / "missing.csv"),
            "--outcome", "y",
            "--cost", str(cost_json),
            "--grid", "50:150:50",
            "--threads", "1",
        ],
    )
    assert result.exit_code == 1


def test_design_command(sample_csv, cost_json, tmp_path):
    """Test a design run from the command line."""
    out = tmp_path / "out"
    result = runner.invoke(
        app,
        [
            "design",
            "--data", str(sample_csv),
            "--outcome", "y",
            "--cost", str(cost_json),
            "--grid", "50:150:50",
            "--method", "oga,lasso",
            "--reference-n", "50",
            "--threads", "1",
            "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    assert (out / "comparison.csv").exists()
    assert (out / "selection_lasso.json").exists()


def test_design_infeasible_budget(sample_csv, cost_json, tmp_path):
    """Test that a budget below every design exits with code 3."""
    result = runner.invoke(
        app,
        [
            "design",
            "--data", str(sample_csv),
            "--outcome", "y",
            "--cost", str(cost_json),
            "--budget", "10",
            "--grid", "50:150:50",
            "--method", "oga",
            "--threads", "1",
            "--out", str(tmp_path / "out"),
        ],
    )
    assert result.exit_code == 3


def test_design_bad_grid(sample_csv, cost_json, tmp_path):
    """Test that a malformed grid exits with code 2."""
    result = runner.invoke(
        app,
        [
            "design",
            "--data", str(sample_csv),
            "--outcome", "y",
            "--cost", str(cost_json),
            "--grid", "50-150",
            "--out", str(tmp_path / "out"),
        ],
    )
    assert result.exit_code == 2


def test_eqb_needs_target(sample_csv, cost_json):
    """Test that eqb without a target or reference exits with code 2."""
    result = runner.invoke(
        app,
        ["eqb", "--data", str(sample_csv), "--outcome", "y", "--cost", str(cost_json)],
    )
    assert result.exit_code == 2


def test_eqb_command(sample_csv, cost_json, tmp_path):
    """Test equivalent budgets for a target RMSE."""
    out = tmp_path / "out"
    result = runner.invoke(
        app,
        [
            "eqb",
            "--data", str(sample_csv),
            "--outcome", "y",
            "--cost", str(cost_json),
            "--grid", "50:150:50",
            "--method", "oga",
            "--target", "0.2",
            "--threads", "1",
            "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    assert (out / "eqb.json").exists()


def test_evaluate_command(sample_csv, cost_json, tmp_path):
    """Test the k-fold command."""
    out = tmp_path / "out"
    result = runner.invoke(
        app,
        [
            "evaluate",
            "--data", str(sample_csv),
            "--outcome", "y",
            "--cost", str(cost_json),
            "--grid", "50:150:50",
            "--method", "oga",
            "--folds", "3",
            "--threads", "1",
            "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    assert (out / "kfold.json").exists()


def test_simulate_command(tmp_path):
    """Test a small Monte Carlo run."""
    out = tmp_path / "out"
    result = runner.invoke(
        app,
        [
            "simulate",
            "--spec", "exp",
            "--kappa", "0,2",
            "--reps", "2",
            "--n-covariates", "6",
            "--n-pre", "100",
            "--cost", "daycare",
            "--grid", "1000:2500:500",
            "--method", "oga",
            "--no-eqb",
            "--threads", "1",
            "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    text = (out / "simulation.csv").read_text(encoding="utf-8")
    assert text.splitlines()[0].startswith("scale,method,n_hat")
    assert len(text.splitlines()) == 3


def test_cost_preset_export(tmp_path):
    """Test exporting a preset cost model by name and loading it back."""
    path = tmp_path / "model.json"
    result = runner.invoke(app, ["cost", "preset", "--name", "daycare", "--out", str(path)])
    assert result.exit_code == 0, result.output
    assert json.loads(path.read_text(encoding="utf-8"))["variant"] == "survey"
    model = load_cost_model(path)
    assert isinstance(model, SurveyCost)
    assert model == daycare()


def test_cost_preset_unknown_name():
    """Test that an unknown preset name exits with code 2."""
    result = runner.invoke(app, ["cost", "preset", "--name", "metro"])
    assert result.exit_code == 2


def test_cost_show():
    """Test the cost breakdown of the day-care reference design."""
    result = runner.invoke(app, ["cost", "show", "--cost", "daycare", "--n", "1330"])
    assert result.exit_code == 0
    assert "Interviews" in result.output
    assert "Total" in result.output


def test_cost_show_needs_size():
    """Test that cost show needs a sample size."""
    result = runner.invoke(app, ["cost", "show", "--cost", "daycare"])
    assert result.exit_code == 2


def test_design_reports_identical_across_threads(sample_csv, cost_json, tmp_path):
    """Test that design reports are byte-identical for 1, 4 and 8 threads."""
    files = [
        "report.json",
        "comparison.csv",
        "selection_oga.json",
        "selection_lasso.json",
        "selection_post-lasso.json",
    ]
    outputs = {}
    for threads in ("1", "4", "8"):
        out = tmp_path / f"threads_{threads}"
        result = runner.invoke(
            app,
            [
                "design",
                "--data", str(sample_csv),
                "--outcome", "y",
                "--cost", str(cost_json),
                "--grid", "50:150:10",
                "--method", "oga,lasso,post-lasso",
                "--reference-n", "50",
                "--seed", "3",
                "--threads", threads,
                "--out", str(out),
            ],
        )
        assert result.exit_code == 0, result.output
        outputs[threads] = [(out / name).read_bytes() for name in files]
    assert outputs["1"] == outputs["4"] == outputs["8"]
