"""Configuration management for surveyopt."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any

import yaml
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


def _default_threads() -> int:
    return os.cpu_count() or 1


class Settings(BaseSettings):
    """Main surveyopt settings, loaded from env vars and config files."""

    # Runtime
    threads: int = Field(default_factory=_default_threads, ge=1)
    seed: int = 0

    # Design search
    studentize: bool = True
    methods: list[str] = Field(default_factory=lambda: ["oga", "lasso", "post-lasso"])

    # LASSO solver
    lasso_tol: float = 1e-8
    lasso_max_sweeps: int = 10_000
    bisection_max_iter: int = 60
    bisection_budget_rtol: float = 1e-3

    # Equivalent budget
    eqb_cap_factor: float = 10.0
    eqb_rtol: float = 1e-3

    # Out-of-sample evaluation
    folds: int = 5

    # Output
    output_dir: str = "outputs"
    save_sweep: bool = False

    model_config = SettingsConfigDict(
        env_prefix="SURVEYOPT_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    @classmethod
    def from_yaml(cls, config_path: str | Path, **overrides: Any) -> Settings:
        """Load settings from a YAML config file with optional overrides."""
        config_path = Path(config_path)
        if config_path.exists():
            with open(config_path, encoding="utf-8") as f:
                yaml_config = yaml.safe_load(f) or {}
        else:
            yaml_config = {}

        flat = _flatten_yaml(yaml_config)
        flat.update(overrides)
        return cls(**flat)

    def snapshot(self) -> dict[str, Any]:
        """Settings that influence results, for embedding in run manifests.

        The thread count is left out: outputs never depend on it.
        """
        return self.model_dump(exclude={"threads", "output_dir"})


def _flatten_yaml(config: dict) -> dict:
    """Flatten nested YAML config into flat settings keys."""
    flat = {}
    key_map = {
        "runtime.threads": "threads",
        "runtime.seed": "seed",
        "solver.studentize": "studentize",
        "solver.methods": "methods",
        "lasso.tol": "lasso_tol",
        "lasso.max_sweeps": "lasso_max_sweeps",
        "lasso.bisection_max_iter": "bisection_max_iter",
        "lasso.bisection_budget_rtol": "bisection_budget_rtol",
        "eqb.cap_factor": "eqb_cap_factor",
        "eqb.rtol": "eqb_rtol",
        "evaluation.folds": "folds",
        "output.dir": "output_dir",
        "output.save_sweep": "save_sweep",
    }

    def _recurse(d: dict, prefix: str = "") -> None:
        for k, v in d.items():
            full_key = f"{prefix}.{k}" if prefix else k
            if isinstance(v, dict):
                _recurse(v, full_key)
            elif full_key in key_map:
                flat[key_map[full_key]] = v

    _recurse(config)
    return flat
