"""Data-generating processes for the Monte Carlo harness."""

from __future__ import annotations

from enum import Enum
from typing import Optional, Sequence

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from surveyopt.cost.grid import SizeGrid
from surveyopt.data.sample import PreSample, from_arrays

logger = structlog.get_logger()

DAYCARE_EFFECT = 0.18656
LINEAR_HEAD = 5


class CoefficientSpec(str, Enum):
    """Shape of the coefficient boost added on top of the base coefficients."""

    LIN_SPARSE = "lin-sparse"
    LIN_EXP = "lin-exp"
    EXP = "exp"


class SimConfig(BaseModel):
    """One Monte Carlo scenario.

    ``base_gamma`` defaults to zeros of length ``n_covariates``. ``boost_order`` lists
    covariate positions from first to last boosted (column order by default). With
    ``covariate_source="resample"`` covariate rows are drawn with replacement from a
    donor sample passed alongside the config. ``estimator="residualized"`` nets the
    pre-sample prediction out of the experimental outcome before comparing means.
    """

    model_config = ConfigDict(frozen=True)

    spec: CoefficientSpec = CoefficientSpec.LIN_SPARSE
    kappa: float = Field(default=0.0, ge=0)
    n_covariates: int = Field(default=36, ge=1)
    base_gamma: Optional[tuple[float, ...]] = None
    boost_order: Optional[tuple[int, ...]] = None
    beta_true: float = DAYCARE_EFFECT
    sigma_eps: float = Field(default=1.0, ge=0)
    n_pre: int = Field(default=1330, ge=2)
    grid: SizeGrid = Field(default_factory=lambda: SizeGrid.from_range(500, 4000, 10))
    reference_n: Optional[int] = Field(default=1330, ge=1)
    replications: int = Field(default=100, ge=1)
    seed: int = 0
    covariate_source: str = "gaussian"
    methods: tuple[str, ...] = ("oga", "lasso", "post-lasso")
    include_experiment: bool = False
    compute_eqb: bool = True
    estimator: str = "regression"

    @field_validator("estimator")
    @classmethod
    def _check_estimator(cls, value: str) -> str:
        if value not in ("regression", "residualized"):
            raise ValueError(f"Unknown estimator: {value}. Available: regression, residualized")
        return value

    @field_validator("covariate_source")
    @classmethod
    def _check_source(cls, value: str) -> str:
        if value not in ("gaussian", "resample"):
            raise ValueError(
                f"Unknown covariate source: {value}. Available: gaussian, resample"
            )
        return value

    @model_validator(mode="after")
    def _check_gamma(self) -> SimConfig:
        if self.base_gamma is not None and len(self.base_gamma) != self.n_covariates:
            raise ValueError(
                f"base_gamma has {len(self.base_gamma)} entries for "
                f"{self.n_covariates} covariates"
            )
        return self

    @property
    def base(self) -> np.ndarray:
        if self.base_gamma is None:
            return np.zeros(self.n_covariates)
        return np.asarray(self.base_gamma, dtype=np.float64)

    def gamma(self) -> np.ndarray:
        return make_gamma(self.spec, self.kappa, self.base, self.boost_order)


def boost_profile(spec: CoefficientSpec | str, n_covariates: int) -> np.ndarray:
    """The unscaled boost gamma_bar for covariates 1..M."""
    spec = CoefficientSpec(spec)
    k = np.arange(1, n_covariates + 1, dtype=np.float64)
    if spec is CoefficientSpec.EXP:
        return 10.0 * np.exp(-k)
    if n_covariates < LINEAR_HEAD:
        raise ValueError(f"{spec.value} needs at least {LINEAR_HEAD} covariates")
    head = 3.0 - 2.0 * (k - 1.0) / LINEAR_HEAD
    tail = np.zeros_like(k) if spec is CoefficientSpec.LIN_SPARSE else np.exp(-k)
    return np.where(k <= LINEAR_HEAD, head, tail)


def make_gamma(
    spec: CoefficientSpec | str,
    kappa: float,
    base_gamma: Sequence[float] | np.ndarray,
    order: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """base + kappa/2 * sign(base) * gamma_bar, with sign(0) taken as +1.

    ``order`` lists covariate positions from first to last boosted (the strongest
    predictors first, say); by default covariates are boosted in column order.
    """
    try:
        spec = CoefficientSpec(spec)
    except ValueError as exc:
        available = ", ".join(s.value for s in CoefficientSpec)
        raise ValueError(f"Unknown coefficient spec: {spec}. Available: {available}") from exc
    base = np.asarray(base_gamma, dtype=np.float64)
    m = base.shape[0]
    profile = boost_profile(spec, m)
    boost = np.empty(m)
    positions = np.arange(m) if order is None else np.asarray(order, dtype=int)
    if sorted(positions.tolist()) != list(range(m)):
        raise ValueError("order must be a permutation of the covariate positions")
    boost[positions] = profile
    sign = np.where(base < 0, -1.0, 1.0)
    return base + 0.5 * sign * kappa * boost


def correlation_order(sample: PreSample) -> tuple[int, ...]:
    """Covariate positions by decreasing absolute correlation with the outcome."""
    x = sample.centered_covariates
    y = sample.centered_outcome
    corr = np.abs(x.T @ y) / (np.linalg.norm(x, axis=0) * max(np.linalg.norm(y), 1e-300))
    return tuple(int(j) for j in np.argsort(-corr, kind="stable"))


def draw_covariates(
    config: SimConfig,
    n: int,
    rng: np.random.Generator,
    donor: Optional[PreSample] = None,
) -> np.ndarray:
    """Covariate rows: independent standard normals, or rows resampled from ``donor``."""
    if config.covariate_source == "resample":
        if donor is None:
            raise ValueError("covariate_source 'resample' needs a donor sample")
        if donor.n_covariates != config.n_covariates:
            raise ValueError(
                f"donor has {donor.n_covariates} covariates, config expects "
                f"{config.n_covariates}"
            )
        return donor.covariates[rng.integers(0, donor.n_rows, size=n)]
    return rng.standard_normal((n, config.n_covariates))


def simulate_pre(
    config: SimConfig,
    gamma: Optional[np.ndarray] = None,
    donor: Optional[PreSample] = None,
    rng: Optional[np.random.Generator] = None,
) -> PreSample:
    """Pre-experimental sample with Y = gamma'X + eps, eps ~ N(0, sigma_eps^2).

    ``gamma`` defaults to ``make_gamma`` on the config; ``rng`` to one seeded with
    ``config.seed``.
    """
    if gamma is None:
        gamma = config.gamma()
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    x = draw_covariates(config, config.n_pre, rng, donor)
    y = x @ gamma + config.sigma_eps * rng.standard_normal(config.n_pre)
    names = donor.covariate_names if donor is not None else None
    return from_arrays(y, x, names)


def simulate_experiment(
    config: SimConfig,
    gamma: np.ndarray,
    n: int,
    rng: np.random.Generator,
    donor: Optional[PreSample] = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Experimental sample of size ``n``: (Y, D, X) with D ~ Bernoulli(0.5) i.i.d."""
    x = draw_covariates(config, n, rng, donor)
    d = rng.binomial(1, 0.5, size=n).astype(np.float64)
    y = config.beta_true * d + x @ gamma + config.sigma_eps * rng.standard_normal(n)
    return y, d, x
