"""Calibrated cost models for the day-care and school-grants applications.

Day-care (individual household survey in Rio de Janeiro, 36 candidate covariates):
administration costs of 10,000 at T = 120 minutes give phi = 1,473 with alpha = 0.4;
training costs of 25,000 at n = 1,466 give kappa(1,466) ~ 208, growing to 350 for very large
samples; interview costs of 630,000 give eta + 120 p ~ 429.74, split as eta = 200 and
p = 1.91. Each question takes tau = 3 minutes, the outcome included, so the higher cost of
measuring the outcome sits in eta rather than in a longer tau0. Reading the outcome cost as a
fixed 114.6 per interview instead does not reproduce the zero-covariate sample size that the
rescaled budget of 569,074 affords.

School grants (cluster design over schools, 24 students per school in the experiment):
two collection channels. Teacher and principal questionnaires are low cost, administered once
per school by enumerators trained in groups of 20; student tests are high cost, administered
to every student by enumerators trained in groups of 4. The low channel's per-question time
is 60/255 minutes: its administration calibration puts the whole 255-question
questionnaire at T_low = 60. Budgets are 25,338 (baseline outcome, 142 low-cost covariates)
and 33,281 (follow-up outcome, 140 low-cost covariates plus 3 high-cost baseline tests).
The baseline budget buys every covariate at 95 schools. The follow-up budget cannot pay for
the 760-odd follow-up students at these prices: the four high-cost tests alone carry about
24,000 of administration. Its reference experiment is therefore the largest one the budget
buys with 24 students per school, 10 schools.
"""

from __future__ import annotations

from typing import NamedTuple, Optional, Sequence

import structlog

from surveyopt.cost.grid import Clusters, Individuals, SizeGrid
from surveyopt.cost.model import (
    BlockedCost,
    BlockPartition,
    CostBlock,
    CostModel,
    StepFunction,
    SurveyCost,
)

logger = structlog.get_logger()

PRESET_NAMES = ("daycare", "schoolgrants_baseline", "schoolgrants_followup")

DAYCARE_COVARIATES = 36
DAYCARE_BUDGET = 569_074.0
DAYCARE_REFERENCE_N = 1_330

SCHOOLGRANTS_BASELINE_COVARIATES = 142
SCHOOLGRANTS_FOLLOWUP_COVARIATES = 143
SCHOOLGRANTS_FOLLOWUP_HIGH = 3
SCHOOLGRANTS_BASELINE_BUDGET = 25_338.0
SCHOOLGRANTS_FOLLOWUP_BUDGET = 33_281.0
SCHOOLGRANTS_STUDENTS_PER_SCHOOL = 24
SCHOOLGRANTS_BASELINE_SCHOOLS = 95
SCHOOLGRANTS_FOLLOWUP_SCHOOLS = 10
TAU_LOW = 60.0 / 255.0
TAU_HIGH = 15.0


class CostPreset(NamedTuple):
    model: CostModel
    budget: float
    grid: SizeGrid


class ReferenceDesign(NamedTuple):
    """The experiment a preset's budget was rescaled to: every covariate at this size."""

    size: Individuals | Clusters
    n_covariates: int


def daycare_kappa() -> StepFunction:
    return StepFunction(
        cutoffs=(1_400, 3_000, 4_500, 6_000), values=(150, 208, 250, 300, 350)
    )


def daycare(n_covariates: int = DAYCARE_COVARIATES) -> SurveyCost:
    return SurveyCost(
        phi=1_473,
        alpha=0.4,
        kappa=daycare_kappa(),
        eta=200,
        p=1.91,
        tau0=3,
        tau=(3.0,) * n_covariates,
        budget=DAYCARE_BUDGET,
    )


def schoolgrants_low_block() -> CostBlock:
    return CostBlock(
        phi=285,
        alpha=0.7,
        kappa=StepFunction.ladder(width=20, increment=20, bands=19),
        lambda_=0.14,
        eta=10,
        p=0.45,
        respondents="clusters",
    )


def schoolgrants_high_block() -> CostBlock:
    return CostBlock(
        phi=1_366,
        alpha=0.7,
        kappa=StepFunction.ladder(width=4, increment=12, bands=17),
        lambda_=0.019,
        mu_n=StepFunction.ladder(width=10, increment=1, bands=7),
        eta=50,
        p=0.3,
        respondents="individuals",
    )


def schoolgrants(
    n_covariates: int, high: Sequence[int] = (), budget: Optional[float] = None
) -> BlockedCost:
    """Blocked school-grants model; covariates not listed in ``high`` are low cost."""
    high = tuple(sorted(set(high)))
    low = tuple(j for j in range(n_covariates) if j not in set(high))
    tau = tuple(TAU_HIGH if j in set(high) else TAU_LOW for j in range(n_covariates))
    return BlockedCost(
        tau0=TAU_HIGH,
        tau=tau,
        blocks=BlockPartition(low=low, high=high),
        low=schoolgrants_low_block(),
        high=schoolgrants_high_block(),
        budget=budget,
    )


def schoolgrants_grid() -> SizeGrid:
    """10 to 400 schools in steps of 10, 1 to 60 students per school."""
    return SizeGrid.clusters((10, 400, 10), (1, 60, 1))


def preset(
    name: str,
    n_covariates: Optional[int] = None,
    high: Optional[Sequence[int]] = None,
) -> CostPreset:
    """Calibrated cost model, budget and size grid by name.

    ``n_covariates`` resizes the model to a dataset's covariate count; ``high`` overrides
    which covariates the school-grants follow-up model treats as high cost (by default its
    last three).
    """
    if name == "daycare":
        model = daycare(n_covariates or DAYCARE_COVARIATES)
        grid = SizeGrid.from_range(500, 4_000, 1)
        return CostPreset(model, DAYCARE_BUDGET, grid)
    if name == "schoolgrants_baseline":
        m = n_covariates or SCHOOLGRANTS_BASELINE_COVARIATES
        model = schoolgrants(m, high or (), SCHOOLGRANTS_BASELINE_BUDGET)
        return CostPreset(model, SCHOOLGRANTS_BASELINE_BUDGET, schoolgrants_grid())
    if name == "schoolgrants_followup":
        m = n_covariates or SCHOOLGRANTS_FOLLOWUP_COVARIATES
        if high is None:
            high = range(max(0, m - SCHOOLGRANTS_FOLLOWUP_HIGH), m)
        model = schoolgrants(m, high, SCHOOLGRANTS_FOLLOWUP_BUDGET)
        return CostPreset(model, SCHOOLGRANTS_FOLLOWUP_BUDGET, schoolgrants_grid())
    raise ValueError(f"Unknown cost preset: {name}. Available: {', '.join(PRESET_NAMES)}")


def reference_design(name: str, n_covariates: Optional[int] = None) -> ReferenceDesign:
    """Size and covariate count of the experiment behind a preset's budget."""
    if name == "daycare":
        return ReferenceDesign(
            Individuals(n=DAYCARE_REFERENCE_N), n_covariates or DAYCARE_COVARIATES
        )
    if name == "schoolgrants_baseline":
        return ReferenceDesign(
            Clusters(c=SCHOOLGRANTS_BASELINE_SCHOOLS, n_c=SCHOOLGRANTS_STUDENTS_PER_SCHOOL),
            n_covariates or SCHOOLGRANTS_BASELINE_COVARIATES,
        )
    if name == "schoolgrants_followup":
        return ReferenceDesign(
            Clusters(c=SCHOOLGRANTS_FOLLOWUP_SCHOOLS, n_c=SCHOOLGRANTS_STUDENTS_PER_SCHOOL),
            n_covariates or SCHOOLGRANTS_FOLLOWUP_COVARIATES,
        )
    raise ValueError(f"Unknown cost preset: {name}. Available: {', '.join(PRESET_NAMES)}")
