"""Stacked regression for several outcomes sharing one covariate collection."""

from __future__ import annotations

import numpy as np
import structlog

from surveyopt.data.groups import GroupSpec
from surveyopt.data.sample import PreSample

logger = structlog.get_logger()


def stack_multivariate(sample: PreSample, grouping: GroupSpec) -> tuple[PreSample, GroupSpec]:
    """Stack L outcomes into one regression with block-diagonal covariates.

    The stacked sample has N*L rows (outcome blocks in order) and M*L columns, column
    ``l*M + m`` holding covariate m in block l and zeros elsewhere. Each group G maps to
    the stacked columns {l*M + m : m in G, l < L}, so selecting it collects its covariates
    once for every outcome. Blocks keep their own intercepts.
    """
    n_outcomes = sample.n_outcomes
    if n_outcomes < 2:
        raise ValueError("stacking requires L ≥ 2")
    if sample.blocks != 1:
        raise ValueError("sample is already stacked")
    if grouping.n_covariates != sample.n_covariates:
        raise ValueError(
            f"grouping covers {grouping.n_covariates} covariates, "
            f"sample has {sample.n_covariates}"
        )

    m = sample.n_covariates
    covariates = np.kron(np.eye(n_outcomes), sample.covariates)
    outcome = sample.outcomes.T.reshape(-1)

    names = tuple(
        f"{outcome_name}:{covariate_name}"
        for outcome_name in sample.outcome_names
        for covariate_name in sample.covariate_names
    )
    stacked = PreSample(
        outcomes=outcome,
        covariates=covariates,
        covariate_names=names,
        outcome_names=("+".join(sample.outcome_names),),
        studentized=False,
        column_scales=tuple(sample.column_scales) * n_outcomes,
        blocks=n_outcomes,
        sources=tuple(sample.sources) * n_outcomes,
        source_names=sample.source_names,
        drop_report=sample.drop_report,
    )

    def _expand(indices: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(sorted(block * m + j for block in range(n_outcomes) for j in indices))

    stacked_groups = GroupSpec(
        groups=tuple(_expand(g) for g in grouping.groups),
        forced=_expand(grouping.forced),
        n_covariates=m * n_outcomes,
    )
    logger.info(
        "Stacked outcomes",
        outcomes=n_outcomes,
        rows=stacked.n_rows,
        columns=stacked.n_covariates,
        groups=stacked_groups.p,
    )
    return stacked, stacked_groups
