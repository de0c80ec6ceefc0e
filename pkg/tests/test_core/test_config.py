"""Tests for settings loading."""

from __future__ import annotations

from surveyopt.core.config import Settings


def test_defaults():
    """Test default solver settings."""
    settings = Settings()
    assert settings.methods == ["oga", "lasso", "post-lasso"]
    assert settings.studentize
    assert settings.folds == 5
    assert settings.threads >= 1


def test_from_yaml_nested_keys(tmp_path):
    """Test that nested YAML sections map onto flat settings."""
    path = tmp_path / "config.yaml"
    path.write_text(
        "runtime:\n  threads: 2\n  seed: 9\n"
        "lasso:\n  tol: 1.0e-6\n"
        "eqb:\n  cap_factor: 4.0\n"
        "evaluation:\n  folds: 3\n"
        "unrelated:\n  key: 1\n",
        encoding="utf-8",
    )
    settings = Settings.from_yaml(path)
    assert settings.threads == 2
    assert settings.seed == 9
    assert settings.lasso_tol == 1e-6
    assert settings.eqb_cap_factor == 4.0
    assert settings.folds == 3


def test_overrides_win(tmp_path):
    """Test that explicit overrides beat the YAML file."""
    path = tmp_path / "config.yaml"
    path.write_text("runtime:\n  seed: 9\n", encoding="utf-8")
    assert Settings.from_yaml(path, seed=1).seed == 1


def test_missing_yaml_uses_defaults(tmp_path):
    """Test that a missing config file falls back to defaults."""
    assert Settings.from_yaml(tmp_path / "absent.yaml").eqb_rtol == Settings().eqb_rtol


def test_threads_from_env(monkeypatch):
    """Test the SURVEYOPT_THREADS environment fallback."""
    monkeypatch.setenv("SURVEYOPT_THREADS", "3")
    assert Settings().threads == 3


def test_snapshot_leaves_out_threads():
    """Test that the manifest snapshot omits settings that do not affect results."""
    snapshot = Settings(threads=8).snapshot()
    assert "threads" not in snapshot
    assert "output_dir" not in snapshot
    assert snapshot["seed"] == 0
