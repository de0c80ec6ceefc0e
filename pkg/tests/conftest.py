"""Shared fixtures: a small synthetic pre-experimental sample and a near-linear cost."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from surveyopt.core.config import Settings
from surveyopt.cost.model import StepFunction, SurveyCost
from surveyopt.data.sample import PreSample, from_arrays, studentize

GAMMA = (3.0, 1.5, 0.5, 0.0, 0.0, 0.0)


def make_sample(n_rows: int = 300, seed: int = 0) -> PreSample:
    """y = 3 x1 + 1.5 x2 + 0.5 x3 + N(0, 1) noise over six independent normal covariates."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_rows, len(GAMMA)))
    y = 1.0 + x @ np.asarray(GAMMA) + rng.standard_normal(n_rows)
    return from_arrays(y, x)


def linear_cost(n_covariates: int = len(GAMMA), budget: float | None = None) -> SurveyCost:
    """Cost close to n * (1 + k): one unit per question, outcome included."""
    return SurveyCost(
        phi=1e-6,
        alpha=0.5,
        kappa=StepFunction.constant(0.0),
        eta=0.0,
        p=1.0,
        tau0=1.0,
        tau=(1.0,) * n_covariates,
        budget=budget,
    )


@pytest.fixture
def sample() -> PreSample:
    return studentize(make_sample())


@pytest.fixture
def cost_model() -> SurveyCost:
    return linear_cost(budget=1_500.0)


@pytest.fixture
def settings() -> Settings:
    return Settings(threads=1)


@pytest.fixture
def sample_csv(tmp_path: Path) -> Path:
    raw = make_sample(n_rows=150, seed=1)
    frame = pd.DataFrame(raw.covariates, columns=list(raw.covariate_names))
    frame.insert(0, "y", raw.outcome)
    path = tmp_path / "pre.csv"
    frame.to_csv(path, index=False)
    return path


@pytest.fixture
def cost_json(tmp_path: Path) -> Path:
    from surveyopt.cost.model import save_cost_model

    path = tmp_path / "cost.json"
    save_cost_model(linear_cost(budget=700.0), path)
    return path
