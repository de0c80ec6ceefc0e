"""Tests for survey cost models."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from surveyopt.cost.grid import Clusters, Individuals, SizeGrid
from surveyopt.cost.model import (
    ClusteredCost,
    FlatCost,
    StepFunction,
    cheapest_cost,
    enumerator_count,
    load_cost_model,
    max_feasible_size,
    save_cost_model,
    selection_mask,
    step_lookup,
)
from surveyopt.cost.presets import DAYCARE_BUDGET, daycare, daycare_kappa, schoolgrants


def test_step_function_closed_on_right():
    """Test band lookup at and just past a cutoff."""
    kappa = daycare_kappa()
    assert kappa(1_400) == 150
    assert kappa(1_401) == 208
    assert kappa(10_000) == 350
    assert step_lookup(kappa, 1_400.5) == 208


def test_step_function_nonpositive_raises():
    """Test that step functions are defined on positive values only."""
    with pytest.raises(ValueError, match="x > 0"):
        daycare_kappa()(0)


def test_ladder():
    """Test the evenly spaced step ladder."""
    f = StepFunction.ladder(width=20, increment=20, bands=3)
    assert f.cutoffs == (20, 40)
    assert [f(10), f(20), f(21), f(500)] == [20, 20, 40, 60]


def test_step_function_mismatched_values():
    """Test that values must have one more entry than cutoffs."""
    with pytest.raises(ValueError, match="cutoffs need"):
        StepFunction(cutoffs=(1.0, 2.0), values=(1.0, 2.0))


def test_flat_cost():
    """Test the linear cost variant."""
    model = FlatCost(n_covariates=4, unit_price=2.0)
    assert model.total_cost([True, True, False, False], Individuals(n=10)) == 40.0


def test_daycare_reference_cost():
    """Test the day-care calibration: every covariate at n = 1,330."""
    model = daycare()
    cost = model.total_cost(np.ones(36, dtype=bool), Individuals(n=1_330))
    assert cost == pytest.approx(574_314, rel=1e-3)


def test_daycare_outcome_only_affordability():
    """Test the sample size the day-care budget buys without covariates."""
    model = daycare()
    nothing = np.zeros(36, dtype=bool)
    assert model.total_cost(nothing, 2_700) < DAYCARE_BUDGET
    assert model.total_cost(nothing, 2_800) > DAYCARE_BUDGET


def test_breakdown_components():
    """Test that the breakdown sums to the total."""
    model = daycare()
    mask = selection_mask(36, range(10))
    parts = model.breakdown(mask, Individuals(n=1_000))
    assert parts.train == pytest.approx(150 * 33)
    assert parts.interview == pytest.approx(1_000 * (200 + 1.91 * 33))
    assert parts.total == pytest.approx(model.total_cost(mask, 1_000))


def test_cost_monotone_in_selection():
    """Test that adding a covariate never lowers the cost."""
    model = daycare()
    size = Individuals(n=1_500)
    costs = [model.total_cost(selection_mask(36, range(k)), size) for k in range(37)]
    assert all(a <= b for a, b in zip(costs, costs[1:]))


def test_mask_length_checked():
    """Test that a selection of the wrong length is rejected."""
    with pytest.raises(ValueError, match="cost model prices"):
        daycare().total_cost([True, False], 100)


def test_enumerator_count_floor():
    """Test the enumerator count, exact products included."""
    assert enumerator_count(0.14, 350) == 49
    assert enumerator_count(0.019, 10) == 1


def test_clustered_cost_uses_enumerators():
    """Test that cluster training prices step in enumerators."""
    model = ClusteredCost(
        phi=1.0,
        alpha=0.5,
        kappa=StepFunction(cutoffs=(5,), values=(10, 100)),
        eta=1.0,
        p=0.0,
        tau0=1.0,
        tau=(1.0, 1.0),
        lambda_=0.1,
    )
    assert model.enumerators(Clusters(c=50, n_c=3)) == 5
    parts = model.breakdown([False, False], Clusters(c=50, n_c=3))
    assert parts.train == 10.0
    assert parts.interview == 5.0


def test_blocked_low_channel_only_when_used():
    """Test that the low-cost channel's fixed costs need a low-cost covariate."""
    model = schoolgrants(4, high=(3,))
    size = Clusters(c=100, n_c=24)
    high_only = model.breakdown([False, False, False, True], size)
    with_low = model.breakdown([True, False, False, True], size)
    assert high_only.interview < with_low.interview
    assert model.breakdown([False, False, False, False], size).total < high_only.total


def test_cost_model_json(tmp_path):
    """Test saving and loading a cost model file."""
    path = tmp_path / "cost.json"
    save_cost_model(schoolgrants(5, high=(4,), budget=1_000.0), path)
    model = load_cost_model(path)
    assert model.n_covariates == 5
    assert model.budget == 1_000.0
    size = Clusters(c=40, n_c=10)
    mask = selection_mask(5, [0, 4])
    assert model.total_cost(mask, size) == schoolgrants(5, high=(4,)).total_cost(mask, size)


def test_load_missing_cost_model(tmp_path):
    """Test that a missing cost file raises FileNotFoundError."""
    with pytest.raises(FileNotFoundError):
        load_cost_model(tmp_path / "missing.json")


def test_max_feasible_size_flat():
    """Test the largest affordable size under a linear cost."""
    model = FlatCost(n_covariates=2, unit_price=1.0)
    grid = SizeGrid.from_range(50, 150, 50)
    assert max_feasible_size(model, [True, False], 100.0, grid) == Individuals(n=100)
    assert max_feasible_size(model, [True, False], 49.0, grid) is None
    assert cheapest_cost(model, [True, True], grid) == 100.0


def test_max_feasible_size_daycare_no_covariates():
    """Test that the day-care budget buys roughly 2,750 interviews without covariates."""
    model = daycare()
    grid = SizeGrid.from_range(500, 4000)
    size = max_feasible_size(model, selection_mask(36, []), DAYCARE_BUDGET, grid)
    assert size is not None
    assert abs(size.n - 2_762) / 2_762 < 0.02


@given(
    picks=st.lists(st.booleans(), min_size=36, max_size=36),
    n_small=st.integers(min_value=1, max_value=5_000),
    extra=st.integers(min_value=0, max_value=5_000),
)
def test_survey_cost_monotone(picks, n_small, extra):
    """Test that cost never falls when interviews or covariates are added."""
    model = daycare()
    mask = np.array(picks)
    assert model.total_cost(mask, n_small) <= model.total_cost(mask, n_small + extra)
    assert model.total_cost(mask, n_small) <= model.total_cost(np.ones(36, dtype=bool), n_small)
