"""Least squares: pivoted-QR OLS, group orthonormalization, residual variances."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import structlog
from pydantic import BaseModel, ConfigDict

from surveyopt.data.sample import PreSample, center_blocks

logger = structlog.get_logger()

# Pivots below this fraction of the leading pivot are treated as rank deficient.
RANK_RTOL = 1e-10


class OlsFit(BaseModel):
    """Least-squares fit of an outcome on a set of columns.

    ``coefficients`` align with ``indices``; columns found rank deficient get a zero
    coefficient and are listed in ``deficient``. ``intercepts`` holds one intercept per
    outcome block (empty for fits without intercept).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    indices: tuple[int, ...]
    coefficients: np.ndarray
    residuals: np.ndarray
    rss: float
    residual_variance: float
    deficient: tuple[int, ...] = ()
    intercepts: tuple[float, ...] = ()

    @property
    def intercept(self) -> float:
        return self.intercepts[0] if self.intercepts else 0.0


def least_squares(columns: np.ndarray, outcome: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Coefficients of ``outcome`` on ``columns`` by pivoted QR, plus deficient positions."""
    k = columns.shape[1]
    coefficients = np.zeros(k)
    if k == 0:
        return coefficients, []
    q, r, piv = scipy.linalg.qr(columns, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > RANK_RTOL * diag[0])) if diag.size and diag[0] > 0 else 0
    if rank:
        z = scipy.linalg.solve_triangular(r[:rank, :rank], q[:, :rank].T @ outcome)
        coefficients[piv[:rank]] = z
    return coefficients, sorted(int(j) for j in piv[rank:])


def ols(
    columns: np.ndarray,
    outcome: np.ndarray,
    intercept: bool = True,
    indices: Optional[Sequence[int]] = None,
    blocks: int = 1,
) -> OlsFit:
    """Fit ``outcome`` on ``columns`` by least squares.

    With ``intercept`` the outcome and columns are centered within each of ``blocks``
    equal row blocks, which is the same as adding one intercept per block.

    Raises:
        ValueError: If there are more columns than rows or any value is not finite.
    """
    columns = np.asarray(columns, dtype=np.float64)
    outcome = np.asarray(outcome, dtype=np.float64).reshape(-1)
    if columns.ndim == 1:
        columns = columns.reshape(-1, 1)
    n, k = columns.shape
    if outcome.shape[0] != n:
        raise ValueError(f"outcome has {outcome.shape[0]} rows, columns have {n}")
    if k > n:
        raise ValueError(f"cannot fit {k} columns on {n} rows")
    if not (np.all(np.isfinite(columns)) and np.all(np.isfinite(outcome))):
        raise ValueError("ols input must be finite")
    labels = tuple(range(k)) if indices is None else tuple(indices)
    if len(labels) != k:
        raise ValueError(f"{len(labels)} indices for {k} columns")

    if intercept:
        xc, yc = center_blocks(columns, blocks), center_blocks(outcome, blocks)
    else:
        xc, yc = columns, outcome
    coefficients, deficient = least_squares(xc, yc)
    residuals = yc - xc @ coefficients
    rss = float(residuals @ residuals)

    intercepts: tuple[float, ...] = ()
    if intercept:
        shaped = (outcome - columns @ coefficients).reshape(blocks, n // blocks)
        intercepts = tuple(float(v) for v in shaped.mean(axis=1))
    if deficient:
        logger.debug("Rank-deficient columns zeroed", columns=[labels[j] for j in deficient])

    residuals.setflags(write=False)
    coefficients.setflags(write=False)
    return OlsFit(
        indices=labels,
        coefficients=coefficients,
        residuals=residuals,
        rss=rss,
        residual_variance=rss / n,
        deficient=tuple(labels[j] for j in deficient),
        intercepts=intercepts,
    )


def fit_selection(sample: PreSample, indices: Sequence[int]) -> OlsFit:
    """OLS with intercept of the sample's outcome on the given covariate columns."""
    indices = tuple(indices)
    return ols(
        sample.covariates[:, list(indices)],
        sample.outcome,
        intercept=True,
        indices=indices,
        blocks=sample.blocks,
    )


def residual_variance(sample: PreSample, indices: Sequence[int]) -> float:
    """Divisor-N residual variance of the intercept OLS fit on ``indices``."""
    return fit_selection(sample, indices).residual_variance


def orthonormalize_group(columns: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of a group's column span with Gram/N equal to the identity.

    Returns ``(ortho, transform)`` with ``columns @ transform == ortho``. Rank-deficient
    groups yield fewer orthonormal columns than inputs.

    Raises:
        ValueError: If every column is zero.
    """
    columns = np.asarray(columns, dtype=np.float64)
    if columns.ndim == 1:
        columns = columns.reshape(-1, 1)
    n, g = columns.shape
    if g == 0 or not np.any(columns):
        raise ValueError("cannot orthonormalize an all-zero group")
    q, r, piv = scipy.linalg.qr(columns, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > RANK_RTOL * diag[0]))
    scale = np.sqrt(n)
    ortho = scale * q[:, :rank]
    transform = np.zeros((g, rank))
    transform[piv[:rank]] = scale * scipy.linalg.solve_triangular(r[:rank, :rank], np.eye(rank))
    return ortho, transform


def residualize_outcome(
    sample_pre: PreSample,
    indices: Sequence[int],
    experimental_outcome: np.ndarray,
    experimental_covariates: np.ndarray,
) -> np.ndarray:
    """Experimental outcome net of the pre-sample prediction: Y - gamma' Z.

    ``gamma`` is fitted on ``sample_pre`` only and converted back to the units the data
    was loaded in, so ``experimental_covariates`` holds the selected covariates in raw
    units, in the order of ``indices``.
    """
    indices = tuple(indices)
    outcome = np.asarray(experimental_outcome, dtype=np.float64).reshape(-1)
    z = np.asarray(experimental_covariates, dtype=np.float64)
    if z.ndim == 1:
        z = z.reshape(-1, 1) if indices else z.reshape(-1, 0)
    if z.shape[1] != len(indices):
        raise ValueError(
            f"experimental covariates have {z.shape[1]} columns, selection has {len(indices)}"
        )
    if z.shape[0] != outcome.shape[0]:
        raise ValueError("experimental outcome and covariates differ in length")
    if not indices:
        return outcome.copy()
    fit = fit_selection(sample_pre, indices)
    gamma = fit.coefficients / np.asarray([sample_pre.column_scales[j] for j in indices])
    return outcome - z @ gamma


def treatment_effect(
    outcome: np.ndarray, treatment: np.ndarray, covariates: Optional[np.ndarray] = None
) -> float:
    """Treatment coefficient of the OLS regression of Y on (1, D, Z)."""
    treatment = np.asarray(treatment, dtype=np.float64).reshape(-1, 1)
    if covariates is not None and np.size(covariates):
        z = np.asarray(covariates, dtype=np.float64).reshape(treatment.shape[0], -1)
        columns = np.hstack([treatment, z])
    else:
        columns = treatment
    fit = ols(columns, outcome, intercept=True)
    if 0 in fit.deficient:
        raise ValueError("treatment indicator is constant or collinear with the covariates")
    return float(fit.coefficients[0])
