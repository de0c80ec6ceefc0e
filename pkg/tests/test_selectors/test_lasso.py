"""Tests for the LASSO and POST-LASSO selectors."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import settings as hypothesis_settings
from hypothesis import strategies as st

from surveyopt.core.errors import InfeasibleBudgetError
from surveyopt.cost.grid import Individuals, SizeGrid
from surveyopt.data.groups import define_groups
from surveyopt.data.sample import studentize
from surveyopt.regress.ols import fit_selection
from surveyopt.selectors.base import DesignProblem
from surveyopt.selectors.lasso import (
    LassoData,
    LassoSelector,
    coordinate_descent,
    lasso_budget,
    lasso_design,
    lasso_fit,
    soft_threshold,
)
from surveyopt.selectors.registry import SelectorRegistry
from tests.conftest import linear_cost, make_sample


def test_soft_threshold():
    """Test the soft-thresholding operator."""
    assert soft_threshold(1.0, 0.3) == pytest.approx(0.7)
    assert soft_threshold(-1.0, 0.3) == pytest.approx(-0.7)
    assert soft_threshold(0.2, 0.3) == 0.0


def test_coordinate_descent_orthogonal():
    """Test that an identity Gram matrix gives soft-thresholded correlations."""
    coef, converged, _ = coordinate_descent(np.eye(3), np.array([1.0, -0.2, 0.5]), 0.6)
    assert converged
    np.testing.assert_allclose(coef, [0.7, 0.0, 0.2])


def test_lambda_max_empties_support(sample):
    """Test that the penalty at lambda_max selects nothing and just below it something."""
    data = LassoData.from_sample(sample, rescale=False)
    assert data.fit(data.lambda_max).support == ()
    assert data.fit(0.99 * data.lambda_max).support == (0,)


def test_lasso_fit_needs_studentized():
    """Test that lasso_fit rejects raw samples."""
    with pytest.raises(ValueError, match="studentized"):
        lasso_fit(make_sample(), 0.1)


def test_kkt_conditions(sample):
    """Test the optimality conditions of a penalized fit."""
    lam = 0.5
    fit = lasso_fit(sample, lam, tol=1e-12)
    data = LassoData.from_sample(sample, rescale=False)
    grad = 2.0 * (data.corr - data.gram @ fit.coefficients)
    for j, c in enumerate(fit.coefficients):
        if abs(c) > 1e-10:
            assert grad[j] == pytest.approx(lam * np.sign(c), abs=1e-6)
        else:
            assert abs(grad[j]) <= lam + 1e-6


def test_select_within_budget(sample):
    """Test that the selected support is affordable and led by the strongest covariate."""
    selection = lasso_budget(
        sample, define_groups(sample), linear_cost(), 301.0, Individuals(n=100)
    )
    assert selection.cost <= 301.0
    assert selection.k <= 2
    assert 0 in selection.selected_indices
    assert selection.lambda_ is not None and selection.lambda_ > 0
    assert selection.bisection_iters >= 1


def test_everything_affordable(sample):
    """Test that a slack budget skips bisection and keeps every covariate."""
    selection = lasso_budget(
        sample, define_groups(sample), linear_cost(), 10_000.0, Individuals(n=100)
    )
    assert selection.bisection_iters == 0
    assert selection.lambda_ == 0.0
    assert selection.k == 6


def test_infeasible_size(sample):
    """Test that an outcome-only cost above the budget raises."""
    with pytest.raises(InfeasibleBudgetError):
        lasso_budget(sample, define_groups(sample), linear_cost(), 50.0, Individuals(n=100))


def test_post_lasso_refits_same_support(sample):
    """Test that POST-LASSO keeps the LASSO support and fits it at least as well."""
    groups = define_groups(sample)
    size = Individuals(n=100)
    lasso = lasso_budget(sample, groups, linear_cost(), 301.0, size, mode="lasso")
    post = lasso_budget(sample, groups, linear_cost(), 301.0, size, mode="post-lasso")
    assert post.selected_indices == lasso.selected_indices
    assert post.residual_variance <= lasso.residual_variance + 1e-12
    assert post.method == "post-lasso"


def test_forced_covariate_partialled_out(sample):
    """Test that a forced covariate is collected by the LASSO modes."""
    groups = define_groups(sample, forced=[1])
    selection = lasso_budget(sample, groups, linear_cost(), 301.0, Individuals(n=100))
    assert 1 in selection.selected_indices
    assert selection.cost <= 301.0


def test_design_deterministic_across_threads(sample):
    """Test that the grid design does not depend on the thread count."""
    groups = define_groups(sample)
    grid = SizeGrid.parse("50:250:25")
    one = lasso_design(sample, groups, linear_cost(), 600.0, grid, threads=1)
    many = lasso_design(sample, groups, linear_cost(), 600.0, grid, threads=4)
    assert one.size == many.size
    assert one.selected_indices == many.selected_indices
    assert one.criterion == pytest.approx(many.criterion, rel=1e-12)


def test_registry_creates_selectors(settings):
    """Test creating every selector by name."""
    assert SelectorRegistry.create("oga", settings).method_name == "oga"
    assert SelectorRegistry.create("LASSO", settings).method_name == "lasso"
    assert SelectorRegistry.create("post-lasso", settings).method_name == "post-lasso"


def test_unknown_method_raises(settings):
    """Test that an unknown method raises ValueError."""
    with pytest.raises(ValueError, match="Unknown method"):
        SelectorRegistry.create("ridge", settings)


def test_unknown_lasso_mode():
    """Test that the LASSO selector only accepts its two modes."""
    with pytest.raises(ValueError, match="Unknown LASSO mode"):
        LassoSelector("elastic-net")


def test_design_problem_checks_cost_width(sample):
    """Test that the cost model must price every source covariate."""
    with pytest.raises(ValueError, match="cost model prices"):
        DesignProblem(
            sample=sample,
            groups=define_groups(sample),
            model=linear_cost(3),
            budget=100.0,
            grid=SizeGrid.parse("10:20:10"),
        )


@hypothesis_settings(max_examples=100, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=100_000),
    share=st.floats(min_value=0.01, max_value=1.0),
)
def test_kkt_conditions_on_random_fits(seed, share):
    """Test the optimality conditions over random samples and penalties."""
    pre = studentize(make_sample(n_rows=100, seed=seed))
    data = LassoData.from_sample(pre, rescale=False)
    lam = share * data.lambda_max
    fit = lasso_fit(pre, lam, tol=1e-12)
    grad = 2.0 * (data.corr - data.gram @ fit.coefficients)
    for j, c in enumerate(fit.coefficients):
        if abs(c) > 1e-10:
            assert grad[j] == pytest.approx(lam * np.sign(c), abs=1e-6)
        else:
            assert abs(grad[j]) <= lam + 1e-6


def test_zero_penalty_is_least_squares(sample):
    """Test that lambda = 0 reproduces the OLS coefficients."""
    fit = lasso_fit(sample, 0.0, tol=1e-12)
    ols_fit = fit_selection(sample, range(sample.n_covariates))
    np.testing.assert_allclose(fit.coefficients, ols_fit.coefficients, atol=1e-6)


@hypothesis_settings(max_examples=30, deadline=None)
@given(seed=st.integers(min_value=0, max_value=100_000), m=st.integers(min_value=1, max_value=3))
def test_bisection_spends_most_of_the_budget(seed, m):
    """Test that the bisected support uses between 90% and 100% of the budget."""
    pre = studentize(make_sample(seed=seed))
    budget = 100.0 * (1 + m) / 0.95
    for mode in ("lasso", "post-lasso"):
        selection = lasso_budget(
            pre, define_groups(pre), linear_cost(), budget, Individuals(n=100), mode=mode
        )
        assert 0.9 < selection.cost / budget <= 1.0
        assert selection.k == m
