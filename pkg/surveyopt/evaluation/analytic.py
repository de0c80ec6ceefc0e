"""Closed-form benchmarks for the joint choice of sample size and covariate count.

With a smooth residual variance sigma2(k) in the number of covariates k, the design
problem min sigma2(k)/n s.t. n * (cost per interview) <= B has first-order conditions
that can be solved directly:

* uniform prices (one unit per covariate): sigma2(k)/k + sigma2'(k) = 0, free of B;
* a fixed cost F per interview: 1/(F + k) + sigma2'(k)/sigma2(k) = 0;
* several covariate types with increasing prices: for each type, the marginal price over
  the total price per interview equals -sigma2_r / sigma2 (checked, not solved).
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import scipy.optimize
import structlog
from pydantic import BaseModel, Field

logger = structlog.get_logger()

Variance = Callable[[float], float]

FOC_XTOL = 1e-8
_DIFF_STEP = 1e-5


class AnalyticSolution(BaseModel):
    """Optimal continuous covariate count and the sample size it leaves."""

    k: float
    n: float
    budget: float = Field(gt=0)
    interior: bool = True


def derivative(f: Variance, x: float, step: float = _DIFF_STEP) -> float:
    """Central-difference derivative."""
    return (f(x + step) - f(x - step)) / (2.0 * step)


def _solve_foc(
    foc: Callable[[float], float], k_range: tuple[float, float]
) -> tuple[float, bool]:
    """Root of ``foc`` on ``k_range``, or the boundary the objective decreases towards.

    ``foc`` has the sign of the objective's slope in k.
    """
    lo, hi = k_range
    if not 0 < lo < hi:
        raise ValueError(f"k_range must satisfy 0 < lo < hi, got {k_range}")
    f_lo, f_hi = foc(lo), foc(hi)
    if f_lo == 0:
        return lo, True
    if f_hi == 0:
        return hi, True
    if f_lo * f_hi > 0:
        corner = lo if f_lo > 0 else hi
        logger.debug("No interior first-order root", k_range=k_range, corner=corner)
        return corner, False
    return float(scipy.optimize.bisect(foc, lo, hi, xtol=FOC_XTOL)), True


def analytic_k_uniform(
    sigma2: Variance, budget: float, k_range: tuple[float, float]
) -> AnalyticSolution:
    """Optimal k when every covariate costs one unit per interview.

    The root does not depend on the budget, which only sets n = B / k.
    """

    def _foc(k: float) -> float:
        return sigma2(k) / k + derivative(sigma2, k)

    k, interior = _solve_foc(_foc, k_range)
    return AnalyticSolution(k=k, n=budget / k, budget=budget, interior=interior)


def analytic_k_fixedcost(
    sigma2: Variance, fixed_cost: float, budget: float, k_range: tuple[float, float]
) -> AnalyticSolution:
    """Optimal k when each interview costs ``fixed_cost`` plus one unit per covariate."""
    if fixed_cost < 0:
        raise ValueError(f"fixed cost must be nonnegative, got {fixed_cost}")

    def _foc(k: float) -> float:
        return 1.0 / (fixed_cost + k) + derivative(sigma2, k) / sigma2(k)

    k, interior = _solve_foc(_foc, k_range)
    return AnalyticSolution(
        k=k, n=budget / (fixed_cost + k), budget=budget, interior=interior
    )


def type_cost(prices: Sequence[float], k: float) -> float:
    """Per-interview cost of the cheapest ``k`` covariates of one type (linear between)."""
    whole = min(int(math.floor(k)), len(prices))
    cost = float(sum(prices[:whole]))
    if whole < len(prices):
        cost += (k - whole) * prices[whole]
    return cost


def marginal_price(prices: Sequence[float], k: float) -> float:
    """Price of the k-th covariate of one type (the one being added at k)."""
    if not 0 < k <= len(prices):
        raise ValueError(f"k = {k} is not interior for a type with {len(prices)} covariates")
    return float(prices[math.ceil(k) - 1])


def foc_check_heterogeneous(
    cost_by_type: Sequence[Sequence[float]],
    sigma2_slopes: Sequence[float],
    candidate: Sequence[float],
    sigma2_base: float = 1.0,
    tolerance: float = 1e-6,
) -> tuple[bool, ...]:
    """Whether each covariate type's first-order condition holds at ``candidate``.

    ``cost_by_type[r]`` lists the per-interview prices of type r, ascending;
    ``sigma2_slopes[r]`` is the constant change in residual variance per covariate of
    type r, so sigma2(k) = sigma2_base + sum_r slope_r k_r. ``sigma2_base`` defaults to 1, the
    variance of a studentized outcome with no covariates. A type passes when its
    percent marginal cost and percent marginal variance reduction agree within
    ``tolerance`` (relative).
    """
    if not len(cost_by_type) == len(sigma2_slopes) == len(candidate):
        raise ValueError("cost_by_type, sigma2_slopes and candidate differ in length")
    for prices in cost_by_type:
        if list(prices) != sorted(prices):
            raise ValueError("prices within a type must be sorted ascending")

    variance = sigma2_base + sum(s * k for s, k in zip(sigma2_slopes, candidate))
    total = sum(type_cost(p, k) for p, k in zip(cost_by_type, candidate))
    if variance <= 0 or total <= 0:
        raise ValueError("candidate must leave positive variance and positive cost")

    flags = []
    for prices, slope, k in zip(cost_by_type, sigma2_slopes, candidate):
        cost_share = marginal_price(prices, k) / total
        variance_share = -slope / variance
        scale = max(abs(cost_share), abs(variance_share))
        flags.append(abs(cost_share - variance_share) <= tolerance * scale)
    return tuple(flags)
