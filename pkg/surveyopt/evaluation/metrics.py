"""MSE and power of the treatment-effect estimator under homoskedastic errors."""

from __future__ import annotations

import math

import scipy.optimize
from pydantic import BaseModel, ConfigDict, Field
from scipy.stats import norm


def _check_share(dbar: float) -> None:
    if not 0.0 < dbar < 1.0:
        raise ValueError(f"treated share must lie in (0, 1), got {dbar}")


def mse(sigma2: float, n: int, dbar: float = 0.5) -> float:
    """MSE of the difference-in-means estimator: sigma^2 / (n dbar (1 - dbar))."""
    _check_share(dbar)
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be nonnegative, got {sigma2}")
    if n <= 0:
        raise ValueError(f"n must be positive, got {n}")
    return sigma2 / (n * dbar * (1.0 - dbar))


class PowerSpec(BaseModel):
    """Inputs of a two-sided t-test power calculation."""

    model_config = ConfigDict(frozen=True)

    beta: float
    sigma: float = Field(gt=0)
    n: int = Field(gt=0)
    dbar: float = Field(default=0.5, gt=0, lt=1)
    alpha: float = Field(default=0.05, gt=0, lt=1)

    @property
    def standard_error(self) -> float:
        return self.sigma / math.sqrt(self.n * self.dbar * (1.0 - self.dbar))

    @property
    def critical_value(self) -> float:
        return float(norm.ppf(1.0 - self.alpha / 2.0))


def power(spec: PowerSpec) -> float:
    """Power of the two-sided level-alpha t-test at effect ``beta``.

    1 + Phi(b - c) - Phi(b + c) with b = beta / se and c the 1 - alpha/2 normal quantile.
    Exact for jointly normal data, a large-sample approximation otherwise.
    """
    b = spec.beta / spec.standard_error
    c = spec.critical_value
    return float(norm.cdf(b - c) + norm.sf(b + c))


def required_sample_size(
    beta: float,
    sigma: float,
    target_power: float = 0.8,
    dbar: float = 0.5,
    alpha: float = 0.05,
) -> int:
    """Smallest n whose power at ``beta`` reaches ``target_power``."""
    _check_share(dbar)
    if beta == 0:
        raise ValueError("no sample size gives power above alpha at beta = 0")
    if not alpha < target_power < 1.0:
        raise ValueError(f"target power must lie in (alpha, 1), got {target_power}")

    def _power(n: int) -> float:
        return power(PowerSpec(beta=beta, sigma=sigma, n=n, dbar=dbar, alpha=alpha))

    z = norm.ppf(1.0 - alpha / 2.0) + norm.ppf(target_power)
    # One-sided approximation; never smaller than the exact answer.
    n = max(1, math.ceil((z * sigma / beta) ** 2 / (dbar * (1.0 - dbar))))
    while n > 1 and _power(n - 1) >= target_power:
        n -= 1
    while _power(n) < target_power:
        n += 1
    return n


def minimum_detectable_effect(
    sigma: float,
    n: int,
    target_power: float = 0.8,
    dbar: float = 0.5,
    alpha: float = 0.05,
) -> float:
    """Smallest positive effect detected with ``target_power``."""
    if not alpha < target_power < 1.0:
        raise ValueError(f"target power must lie in (alpha, 1), got {target_power}")
    spec = PowerSpec(beta=0.0, sigma=sigma, n=n, dbar=dbar, alpha=alpha)
    upper = (spec.critical_value + norm.ppf(target_power)) * spec.standard_error

    def _gap(beta: float) -> float:
        return power(spec.model_copy(update={"beta": beta})) - target_power

    if _gap(upper) <= 0:
        return upper
    return float(scipy.optimize.brentq(_gap, 0.0, upper, xtol=1e-12))
