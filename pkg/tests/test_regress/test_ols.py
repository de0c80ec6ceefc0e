"""Tests for least squares helpers."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from surveyopt.regress.ols import (
    fit_selection,
    ols,
    orthonormalize_group,
    residual_variance,
    residualize_outcome,
    treatment_effect,
)
from tests.conftest import make_sample


def test_ols_recovers_exact_fit():
    """Test that noise-free data gives back the coefficients and intercept."""
    rng = np.random.default_rng(0)
    x = rng.standard_normal((50, 3))
    y = 2.0 + x @ np.array([1.0, -0.5, 0.25])
    fit = ols(x, y)
    np.testing.assert_allclose(fit.coefficients, [1.0, -0.5, 0.25], atol=1e-10)
    assert fit.intercept == pytest.approx(2.0)
    assert fit.rss == pytest.approx(0.0, abs=1e-18)


def test_rank_deficient_column_zeroed():
    """Test that a duplicated column gets a zero coefficient and is reported."""
    rng = np.random.default_rng(1)
    a = rng.standard_normal(30)
    x = np.column_stack([a, a])
    fit = ols(x, 3.0 * a)
    assert len(fit.deficient) == 1
    assert np.count_nonzero(fit.coefficients) == 1
    assert fit.coefficients.sum() == pytest.approx(3.0)


def test_more_columns_than_rows():
    """Test that an underdetermined fit is rejected."""
    with pytest.raises(ValueError, match="cannot fit"):
        ols(np.ones((2, 3)), np.ones(2))


def test_empty_selection_variance():
    """Test that no covariates leaves the outcome's divisor-N variance."""
    sample = make_sample()
    assert residual_variance(sample, ()) == pytest.approx(sample.outcome.var())


def test_variance_decreases_with_more_columns():
    """Test nestedness of residual variances."""
    sample = make_sample()
    assert residual_variance(sample, (0, 1)) <= residual_variance(sample, (0,))


def test_orthonormalize_group():
    """Test orthonormal basis properties and the transform."""
    rng = np.random.default_rng(2)
    a = rng.standard_normal((40, 2))
    columns = np.column_stack([a, a[:, 0] + a[:, 1]])
    ortho, transform = orthonormalize_group(columns)
    assert ortho.shape == (40, 2)
    np.testing.assert_allclose(ortho.T @ ortho / 40, np.eye(2), atol=1e-10)
    np.testing.assert_allclose(columns @ transform, ortho, atol=1e-10)


def test_orthonormalize_all_zero():
    """Test that an all-zero group raises."""
    with pytest.raises(ValueError, match="all-zero"):
        orthonormalize_group(np.zeros((5, 2)))


def test_treatment_effect_exact():
    """Test the treatment coefficient on noise-free data."""
    rng = np.random.default_rng(4)
    d = np.tile([0.0, 1.0], 20)
    z = rng.standard_normal((40, 2))
    y = 1.0 + 0.7 * d + z @ np.array([2.0, -1.0])
    assert treatment_effect(y, d, z) == pytest.approx(0.7)
    assert treatment_effect(1.0 + 0.7 * d, d) == pytest.approx(0.7)


def test_treatment_constant_raises():
    """Test that a constant treatment indicator is rejected."""
    with pytest.raises(ValueError, match="treatment indicator"):
        treatment_effect(np.arange(10.0), np.ones(10))


def test_residualize_outcome_uses_raw_units():
    """Test that pre-sample coefficients convert back to raw covariate units."""
    from surveyopt.data.sample import studentize

    raw = make_sample()
    sample = studentize(raw)
    fit = fit_selection(raw, (0,))
    z = raw.covariates[:5, [0]]
    y = raw.outcome[:5]
    np.testing.assert_allclose(
        residualize_outcome(sample, (0,), y, z), y - z[:, 0] * fit.coefficients[0]
    )
    np.testing.assert_array_equal(residualize_outcome(sample, (), y, np.zeros((5, 0))), y)


@given(
    seed=st.integers(min_value=0, max_value=10_000),
    width=st.integers(min_value=1, max_value=5),
)
def test_orthonormalize_random_groups(seed, width):
    """Test the Gram identity and the column transform on random groups."""
    columns = np.random.default_rng(seed).standard_normal((40, width))
    ortho, transform = orthonormalize_group(columns)
    np.testing.assert_allclose(ortho.T @ ortho / 40, np.eye(ortho.shape[1]), atol=1e-8)
    np.testing.assert_allclose(columns @ transform, ortho, atol=1e-8)


def test_residualized_variance_matches_pre_sample():
    """Test that the residualized experimental outcome has the pre-sample residual variance."""
    from surveyopt.data.sample import from_arrays, studentize

    rng = np.random.default_rng(21)
    gamma = np.array([1.0, 0.5, 0.25, 0.1])

    def draw(n: int) -> tuple[np.ndarray, np.ndarray]:
        x = rng.standard_normal((n, 4)) * np.array([1.0, 2.0, 0.5, 3.0])
        return x @ gamma + rng.standard_normal(n), x

    y_pre, x_pre = draw(2_000)
    pre = studentize(from_arrays(y_pre, x_pre))
    y_exp, x_exp = draw(5_000)
    for indices in [(0, 1, 2, 3), (0, 2)]:
        output = residualize_outcome(pre, indices, y_exp, x_exp[:, list(indices)])
        assert np.var(output) == pytest.approx(residual_variance(pre, indices), rel=0.1)
