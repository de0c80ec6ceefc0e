"""Pre-experimental samples: ingestion, cleaning and studentization."""

from __future__ import annotations

from functools import cached_property
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
import pandas as pd
import structlog
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from surveyopt.core.utils import ensure_dir

logger = structlog.get_logger()

# Divisor-N variance below this counts as a constant column.
ZERO_VARIANCE_TOL = 1e-12
UNIT_VARIANCE_RTOL = 1e-10


def _frozen_matrix(value: Any) -> np.ndarray:
    array = np.array(value, dtype=np.float64, copy=True)
    if array.ndim == 1:
        array = array.reshape(-1, 1)
    if array.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {array.shape}")
    array.setflags(write=False)
    return array


class DropReport(BaseModel):
    """Rows and columns removed while loading a CSV file."""

    dropped_rows: list[int] = Field(
        default_factory=list, description="1-based data-row numbers (header excluded)"
    )
    dropped_columns: list[str] = Field(default_factory=list)

    def to_json(self) -> dict[str, list]:
        return {"dropped_rows": self.dropped_rows, "dropped_columns": self.dropped_columns}


class PreSample(BaseModel):
    """A pre-experimental dataset: outcomes, candidate covariates and their names.

    Rows are individuals. A stacked multivariate sample (see ``stack_multivariate``) has
    ``blocks`` outcome blocks of equal height laid out block-major; every block gets its
    own intercept. ``sources`` maps each covariate column to the collectable covariate it
    was built from, which is what the cost model prices.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    outcomes: np.ndarray
    covariates: np.ndarray
    covariate_names: tuple[str, ...]
    outcome_names: tuple[str, ...]
    studentized: bool = False
    column_scales: tuple[float, ...] = ()
    blocks: int = Field(default=1, ge=1)
    sources: tuple[int, ...] = ()
    source_names: tuple[str, ...] = ()
    drop_report: DropReport = Field(default_factory=DropReport)

    @field_validator("outcomes", "covariates", mode="before")
    @classmethod
    def _coerce_matrix(cls, value: Any) -> np.ndarray:
        return _frozen_matrix(value)

    @model_validator(mode="before")
    @classmethod
    def _fill_defaults(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        data = dict(data)
        names = tuple(data.get("covariate_names", ()))
        if not data.get("column_scales"):
            data["column_scales"] = (1.0,) * len(names)
        if not data.get("sources"):
            data["sources"] = tuple(range(len(names)))
        if not data.get("source_names"):
            data["source_names"] = names
        return data

    @model_validator(mode="after")
    def _check_invariants(self) -> PreSample:
        n, m = self.covariates.shape
        if self.outcomes.shape[0] != n:
            raise ValueError(
                f"outcomes have {self.outcomes.shape[0]} rows but covariates have {n}"
            )
        if n < 2:
            raise ValueError(f"a pre-experimental sample needs at least 2 rows, got {n}")
        if len(self.covariate_names) != m:
            raise ValueError(f"{len(self.covariate_names)} covariate names for {m} columns")
        if len(self.outcome_names) != self.outcomes.shape[1]:
            raise ValueError(
                f"{len(self.outcome_names)} outcome names for {self.outcomes.shape[1]} columns"
            )
        if len(self.column_scales) != m or any(s <= 0 for s in self.column_scales):
            raise ValueError("column_scales must hold one positive scale per covariate")
        if not (np.all(np.isfinite(self.outcomes)) and np.all(np.isfinite(self.covariates))):
            raise ValueError("outcomes and covariates must be finite (complete cases only)")
        if n % self.blocks:
            raise ValueError(f"{n} rows cannot be split into {self.blocks} outcome blocks")
        if len(self.sources) != m or any(
            not 0 <= s < len(self.source_names) for s in self.sources
        ):
            raise ValueError("sources must map every column to a source covariate")
        if m:
            variances = self.covariates.var(axis=0)
            constant = [
                self.covariate_names[j] for j in np.flatnonzero(variances < ZERO_VARIANCE_TOL)
            ]
            if constant:
                raise ValueError(f"zero-variance covariate columns: {constant}")
            if self.studentized and not np.allclose(
                variances, 1.0, rtol=UNIT_VARIANCE_RTOL, atol=0.0
            ):
                raise ValueError("studentized sample has columns without unit variance")
        return self

    # ── Shape ────────────────────────────────────────────────────────

    @property
    def n_rows(self) -> int:
        return self.covariates.shape[0]

    @property
    def n_covariates(self) -> int:
        return self.covariates.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.outcomes.shape[1]

    @property
    def n_sources(self) -> int:
        """Number of collectable covariates the cost model prices."""
        return len(self.source_names)

    @property
    def outcome(self) -> np.ndarray:
        """The single outcome column as a vector."""
        if self.n_outcomes != 1:
            raise ValueError(
                f"sample has {self.n_outcomes} outcomes; pick one or stack them first"
            )
        return self.outcomes[:, 0]

    # ── Centered views (per outcome block) ──────────────────────────

    @cached_property
    def centered_covariates(self) -> np.ndarray:
        return center_blocks(self.covariates, self.blocks)

    @cached_property
    def centered_outcome(self) -> np.ndarray:
        return center_blocks(self.outcome, self.blocks)

    # ── Derived samples ──────────────────────────────────────────────

    def replace(self, **update: Any) -> PreSample:
        """New validated sample with some fields replaced."""
        data = {name: getattr(self, name) for name in type(self).model_fields}
        data.update(update)
        return PreSample(**data)

    def indices_of(self, names: Sequence[str]) -> tuple[int, ...]:
        """Column indices for covariate names."""
        lookup = {name: j for j, name in enumerate(self.covariate_names)}
        unknown = [name for name in names if name not in lookup]
        if unknown:
            raise ValueError(f"unknown covariate names: {unknown}")
        return tuple(lookup[name] for name in names)

    def source_selection(self, indices: Sequence[int]) -> np.ndarray:
        """Boolean vector over source covariates collected when ``indices`` are used."""
        selection = np.zeros(self.n_sources, dtype=bool)
        for j in indices:
            selection[self.sources[j]] = True
        return selection

    def with_outcome(self, name: str) -> PreSample:
        """Single-outcome sample for one of several outcomes."""
        if name not in self.outcome_names:
            raise ValueError(f"missing outcome column: {name}")
        column = self.outcome_names.index(name)
        return self.replace(outcomes=self.outcomes[:, column], outcome_names=(name,))

    def drop_covariates(self, names: Sequence[str]) -> PreSample:
        """Remove candidate covariates by name."""
        drop = set(self.indices_of(names))
        keep = [j for j in range(self.n_covariates) if j not in drop]
        return self.select_columns(keep)

    def select_columns(self, indices: Sequence[int]) -> PreSample:
        """Sample restricted to the given covariate columns, in order.

        Source covariates are kept as they are, so a cost model for this sample still
        prices the removed ones (they are simply never collected).
        """
        indices = list(indices)
        if self.blocks != 1:
            raise ValueError("column selection is not supported on stacked samples")
        return PreSample(
            outcomes=self.outcomes,
            covariates=self.covariates[:, indices],
            covariate_names=tuple(self.covariate_names[j] for j in indices),
            outcome_names=self.outcome_names,
            studentized=self.studentized,
            column_scales=tuple(self.column_scales[j] for j in indices),
            sources=tuple(self.sources[j] for j in indices),
            source_names=self.source_names,
            drop_report=self.drop_report,
        )

    def subset(self, rows: Sequence[int] | np.ndarray) -> PreSample:
        """Sample restricted to the given rows.

        The result is not flagged as studentized even when this sample is: its columns no
        longer have unit variance. Columns that become constant on the subset are dropped.
        """
        if self.blocks != 1:
            raise ValueError("row subsets are not supported on stacked samples")
        rows = np.asarray(rows, dtype=int)
        covariates = self.covariates[rows]
        keep = np.flatnonzero(covariates.var(axis=0) >= ZERO_VARIANCE_TOL)
        if len(keep) < self.n_covariates:
            logger.debug(
                "Dropping columns constant on subset",
                columns=[self.covariate_names[j] for j in range(self.n_covariates)
                         if j not in set(keep)],
            )
        return PreSample(
            outcomes=self.outcomes[rows],
            covariates=covariates[:, keep],
            covariate_names=tuple(self.covariate_names[j] for j in keep),
            outcome_names=self.outcome_names,
            studentized=False,
            column_scales=tuple(self.column_scales[j] for j in keep),
            sources=tuple(self.sources[j] for j in keep),
            source_names=self.source_names,
        )


def center_blocks(values: np.ndarray, blocks: int = 1) -> np.ndarray:
    """Subtract the mean of each outcome block (rows are block-major)."""
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    shaped = values.reshape((blocks, n // blocks) + values.shape[1:])
    return (shaped - shaped.mean(axis=1, keepdims=True)).reshape(values.shape)


def load_csv(path: str | Path, outcome_columns: Sequence[str]) -> PreSample:
    """Load a pre-experimental sample from a CSV file.

    All columns other than ``outcome_columns`` are candidate covariates. Rows with an
    empty or non-numeric cell are dropped (complete cases only), then covariate columns
    with zero variance are removed. Both removals are recorded in ``drop_report``.

    Raises:
        FileNotFoundError: If the file does not exist.
        ValueError: If an outcome column is missing or no complete row survives.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Data file not found: {path}")
    if not outcome_columns:
        raise ValueError("at least one outcome column is required")

    try:
        frame = pd.read_csv(
            path, dtype=str, keep_default_na=False, encoding="utf-8", skipinitialspace=True
        )
    except pd.errors.EmptyDataError as exc:
        raise ValueError(f"no header row in {path}") from exc

    for name in outcome_columns:
        if name not in frame.columns:
            raise ValueError(f"missing outcome column: {name}")
    if frame.empty:
        raise ValueError(f"no data rows in {path}")

    numeric = frame.apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    complete = numeric.notna().all(axis=1) & np.isfinite(numeric.to_numpy()).all(axis=1)
    dropped_rows = (np.flatnonzero(~complete.to_numpy()) + 1).tolist()
    numeric = numeric.loc[complete]
    if numeric.empty:
        raise ValueError("zero rows survive the complete-case filter")

    covariate_columns = [c for c in numeric.columns if c not in set(outcome_columns)]
    variances = numeric[covariate_columns].var(ddof=0)
    dropped_columns = [c for c in covariate_columns if variances[c] < ZERO_VARIANCE_TOL]
    covariate_columns = [c for c in covariate_columns if c not in set(dropped_columns)]

    report = DropReport(dropped_rows=dropped_rows, dropped_columns=dropped_columns)
    logger.info(
        "Loaded pre-experimental sample",
        path=str(path),
        rows=len(numeric),
        covariates=len(covariate_columns),
        dropped_rows=len(dropped_rows),
        dropped_columns=len(dropped_columns),
    )
    return PreSample(
        outcomes=numeric[list(outcome_columns)].to_numpy(dtype=np.float64),
        covariates=numeric[covariate_columns].to_numpy(dtype=np.float64).reshape(
            len(numeric), len(covariate_columns)
        ),
        covariate_names=tuple(covariate_columns),
        outcome_names=tuple(outcome_columns),
        drop_report=report,
    )


def save_csv(sample: PreSample, path: str | Path) -> Path:
    """Write outcomes then covariates to CSV with full float precision."""
    if sample.blocks != 1:
        raise ValueError("stacked samples cannot be saved as a flat CSV")
    path = Path(path)
    ensure_dir(path.parent)
    frame = pd.DataFrame(
        np.hstack([sample.outcomes, sample.covariates]),
        columns=list(sample.outcome_names) + list(sample.covariate_names),
    )
    frame.to_csv(path, index=False, float_format="%.17g")
    return path


def studentize(sample: PreSample) -> PreSample:
    """Rescale every covariate column to unit divisor-N variance.

    Outcomes are left untouched. ``column_scales`` accumulates the divisors, so scales
    always refer to the units the data was loaded in. Studentizing a studentized sample
    returns it unchanged.
    """
    if sample.studentized:
        return sample
    sd = sample.covariates.std(axis=0)
    return sample.replace(
        covariates=sample.covariates / sd,
        column_scales=tuple(float(s) for s in np.asarray(sample.column_scales) * sd),
        studentized=True,
    )


def from_arrays(
    outcome: np.ndarray,
    covariates: np.ndarray,
    covariate_names: Optional[Sequence[str]] = None,
    outcome_name: str = "y",
) -> PreSample:
    """Build a single-outcome sample from arrays, naming columns x1..xM by default."""
    covariates = np.asarray(covariates, dtype=np.float64)
    if covariates.ndim == 1:
        covariates = covariates.reshape(-1, 1)
    names = (
        tuple(covariate_names)
        if covariate_names is not None
        else tuple(f"x{j + 1}" for j in range(covariates.shape[1]))
    )
    return PreSample(
        outcomes=np.asarray(outcome, dtype=np.float64),
        covariates=covariates,
        covariate_names=names,
        outcome_names=(outcome_name,),
    )
