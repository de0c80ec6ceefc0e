"""Tests for pre-experimental sample loading and studentization."""

from __future__ import annotations

import numpy as np
import pytest

from surveyopt.data.sample import PreSample, from_arrays, load_csv, save_csv, studentize
from tests.conftest import make_sample


def test_load_csv_drops_incomplete_rows_and_constant_columns(tmp_path):
    """Test complete-case filtering and zero-variance column removal."""
    path = tmp_path / "pre.csv"
    path.write_text(
        "y,age,flag,income\n"
        "1.0,30,1,100\n"
        "2.0,,1,200\n"
        "3.0,50,1,abc\n"
        "4.0,45,1,150\n"
        "5.0,60,1,120\n",
        encoding="utf-8",
    )
    sample = load_csv(path, ["y"])
    assert sample.n_rows == 3
    assert sample.covariate_names == ("age", "income")
    assert sample.drop_report.dropped_rows == [2, 3]
    assert sample.drop_report.dropped_columns == ["flag"]


def test_load_csv_missing_outcome(tmp_path):
    """Test that a missing outcome column raises ValueError."""
    path = tmp_path / "pre.csv"
    path.write_text("a,b\n1,2\n3,5\n", encoding="utf-8")
    with pytest.raises(ValueError, match="missing outcome column"):
        load_csv(path, ["y"])


def test_load_csv_missing_file(tmp_path):
    """Test that a missing data file raises FileNotFoundError."""
    with pytest.raises(FileNotFoundError):
        load_csv(tmp_path / "nope.csv", ["y"])


def test_studentize_unit_variance():
    """Test that studentized columns have unit divisor-N variance and tracked scales."""
    raw = make_sample()
    sample = studentize(raw)
    assert sample.studentized
    np.testing.assert_allclose(sample.covariates.var(axis=0), 1.0, rtol=1e-10)
    np.testing.assert_allclose(sample.column_scales, raw.covariates.std(axis=0))
    np.testing.assert_array_equal(sample.outcome, raw.outcome)


def test_studentize_idempotent():
    """Test that studentizing twice changes nothing."""
    sample = studentize(make_sample())
    assert studentize(sample) is sample


def test_zero_variance_column_rejected():
    """Test that a constant covariate column is rejected."""
    x = np.column_stack([np.arange(5.0), np.ones(5)])
    with pytest.raises(ValueError, match="zero-variance"):
        from_arrays(np.arange(5.0), x)


def test_non_finite_rejected():
    """Test that NaN values are rejected."""
    x = np.array([[1.0], [np.nan], [3.0]])
    with pytest.raises(ValueError, match="finite"):
        from_arrays(np.arange(3.0), x)


def test_from_arrays_default_names():
    """Test default covariate naming."""
    sample = from_arrays(np.arange(4.0), np.arange(8.0).reshape(4, 2) ** 2)
    assert sample.covariate_names == ("x1", "x2")
    assert sample.outcome_names == ("y",)


def test_drop_covariates_keeps_sources():
    """Test that dropped covariates stay priced by the source list."""
    sample = make_sample().drop_covariates(["x2", "x5"])
    assert sample.covariate_names == ("x1", "x3", "x4", "x6")
    assert sample.n_sources == 6
    assert sample.sources == (0, 2, 3, 5)
    assert sample.source_selection([1]).tolist() == [False, False, True, False, False, False]


def test_subset_not_studentized():
    """Test that a row subset loses the studentized flag but keeps scales."""
    sample = studentize(make_sample())
    part = sample.subset(np.arange(100))
    assert part.n_rows == 100
    assert not part.studentized
    assert part.column_scales == sample.column_scales
    assert part.source_names == sample.source_names


def test_unknown_name_raises():
    """Test lookup of an unknown covariate name."""
    with pytest.raises(ValueError, match="unknown covariate names"):
        make_sample().indices_of(["age"])


def test_save_csv_reload(tmp_path):
    """Test that a saved sample reloads with the same values."""
    sample = make_sample(n_rows=20)
    path = save_csv(sample, tmp_path / "out.csv")
    again = load_csv(path, ["y"])
    np.testing.assert_allclose(again.covariates, sample.covariates)
    assert isinstance(again, PreSample)
