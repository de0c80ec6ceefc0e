"""Tests for Monte Carlo data-generating processes."""

from __future__ import annotations

import numpy as np
import pytest

from surveyopt.sim.designs import (
    CoefficientSpec,
    SimConfig,
    boost_profile,
    correlation_order,
    make_gamma,
    simulate_experiment,
    simulate_pre,
)


def test_lin_sparse_profile():
    """Test the linear head and zero tail of the sparse profile."""
    gamma = make_gamma("lin-sparse", 2.0, np.zeros(8))
    np.testing.assert_allclose(gamma[:5], [3.0, 2.6, 2.2, 1.8, 1.4])
    assert not gamma[5:].any()


def test_lin_exp_tail():
    """Test the exponential tail of the linear-exponential profile."""
    profile = boost_profile(CoefficientSpec.LIN_EXP, 7)
    np.testing.assert_allclose(profile[5:], np.exp(-np.array([6.0, 7.0])))


def test_exp_profile():
    """Test the exponentially decaying profile."""
    gamma = make_gamma("exp", 1.0, np.zeros(3))
    np.testing.assert_allclose(gamma, 5.0 * np.exp(-np.array([1.0, 2.0, 3.0])))


def test_boost_follows_base_sign():
    """Test that negative base coefficients are pushed further from zero."""
    gamma = make_gamma("exp", 2.0, [-1.0, 1.0])
    assert gamma[0] == pytest.approx(-1.0 - 10.0 * np.exp(-1.0))
    assert gamma[1] == pytest.approx(1.0 + 10.0 * np.exp(-2.0))


def test_zero_scale_keeps_base():
    """Test that kappa = 0 leaves the base coefficients unchanged."""
    base = np.array([0.3, -0.2, 0.0, 0.1, 0.5])
    np.testing.assert_array_equal(make_gamma("lin-sparse", 0.0, base), base)


def test_boost_order():
    """Test boosting covariates in a given order."""
    gamma = make_gamma("exp", 2.0, np.zeros(3), order=[2, 0, 1])
    assert gamma[2] == pytest.approx(10.0 * np.exp(-1.0))


def test_unknown_spec():
    """Test that an unknown coefficient spec raises ValueError."""
    with pytest.raises(ValueError, match="Unknown coefficient spec"):
        make_gamma("quadratic", 1.0, np.zeros(5))


def test_simulate_pre_reproducible():
    """Test that the pre-sample is reproducible from the config seed."""
    config = SimConfig(n_covariates=6, n_pre=50, kappa=1.0, seed=3)
    a = simulate_pre(config)
    b = simulate_pre(config)
    assert a.n_rows == 50 and a.n_covariates == 6
    np.testing.assert_array_equal(a.outcome, b.outcome)


def test_simulate_experiment_shapes():
    """Test the simulated experiment: binary treatment and matching shapes."""
    config = SimConfig(n_covariates=6, kappa=1.0)
    gamma = make_gamma(config.spec, config.kappa, config.base)
    y, d, x = simulate_experiment(config, gamma, 200, np.random.default_rng(0))
    assert y.shape == d.shape == (200,)
    assert x.shape == (200, 6)
    assert set(np.unique(d)) <= {0.0, 1.0}


def test_config_boost_order():
    """Test that the config boosts covariates in its boost order."""
    config = SimConfig(spec="exp", n_covariates=3, kappa=2.0, boost_order=(2, 0, 1))
    np.testing.assert_allclose(config.gamma(), 10.0 * np.exp(-np.array([2.0, 3.0, 1.0])))


def test_config_checks_base_length():
    """Test that base coefficients must match the covariate count."""
    with pytest.raises(ValueError, match="base_gamma"):
        SimConfig(n_covariates=6, base_gamma=(1.0, 2.0))


def test_resample_needs_donor():
    """Test that resampling covariates needs a donor sample."""
    config = SimConfig(n_covariates=6, covariate_source="resample")
    with pytest.raises(ValueError, match="donor"):
        simulate_pre(config)


def test_correlation_order():
    """Test ordering covariates by outcome correlation."""
    config = SimConfig(spec="exp", n_covariates=6, n_pre=500, kappa=2.0)
    order = correlation_order(simulate_pre(config))
    assert order[0] == 0
