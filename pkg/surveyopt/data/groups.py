"""Covariate group definitions and forced covariates."""

from __future__ import annotations

from typing import TYPE_CHECKING, Sequence, Union

from pydantic import BaseModel, ConfigDict, model_validator

if TYPE_CHECKING:
    from surveyopt.data.sample import PreSample

Grouping = Union[str, Sequence[Sequence[int]]]


class GroupSpec(BaseModel):
    """Pre-determined, possibly overlapping covariate groups selected jointly.

    Indices are 0-based column positions. Forced covariates appear in every group, so
    committing any group collects them.
    """

    model_config = ConfigDict(frozen=True)

    groups: tuple[tuple[int, ...], ...]
    forced: tuple[int, ...] = ()
    n_covariates: int

    @model_validator(mode="after")
    def _check(self) -> GroupSpec:
        covered: set[int] = set()
        for g, members in enumerate(self.groups):
            if not members:
                raise ValueError(f"empty group supplied at position {g}")
            bad = [j for j in members if not 0 <= j < self.n_covariates]
            if bad:
                raise ValueError(f"index out of range in group {g}: {bad}")
            if not set(self.forced) <= set(members):
                raise ValueError(f"group {g} is missing forced covariates")
            covered.update(members)
        missing = sorted(set(range(self.n_covariates)) - covered)
        if missing:
            raise ValueError(f"grouping does not cover covariates {missing}")
        return self

    @property
    def p(self) -> int:
        """Number of groups."""
        return len(self.groups)

    @property
    def j_max(self) -> int:
        """Largest group size."""
        return max((len(g) for g in self.groups), default=0)

    def union(self, selected_groups: Sequence[int]) -> tuple[int, ...]:
        """Sorted covariate indices covered by the given groups."""
        members: set[int] = set()
        for g in selected_groups:
            members.update(self.groups[g])
        return tuple(sorted(members))

    def restrict(self, kept: Sequence[int]) -> GroupSpec:
        """Groups over a sample that keeps only the columns ``kept`` (old indices, in order).

        Groups that lose every member are dropped.
        """
        position = {old: new for new, old in enumerate(kept)}
        groups = []
        for members in self.groups:
            mapped = tuple(sorted(position[j] for j in members if j in position))
            if mapped and mapped not in groups:
                groups.append(mapped)
        forced = tuple(sorted(position[j] for j in self.forced if j in position))
        return GroupSpec(groups=tuple(groups), forced=forced, n_covariates=len(kept))


def define_groups(
    sample: PreSample, grouping: Grouping = "singletons", forced: Sequence[int] = ()
) -> GroupSpec:
    """Build a GroupSpec over the sample's covariate columns.

    ``"singletons"`` gives one group per covariate. Forced indices are unioned into every
    group.
    """
    m = sample.n_covariates
    forced = tuple(sorted(set(forced)))
    bad = [j for j in forced if not 0 <= j < m]
    if bad:
        raise ValueError(f"forced index out of range: {bad}")

    if isinstance(grouping, str):
        if grouping != "singletons":
            raise ValueError(f"Unknown grouping: {grouping}. Available: singletons")
        raw: list[Sequence[int]] = [(j,) for j in range(m)]
    else:
        raw = list(grouping)

    groups = []
    for g, members in enumerate(raw):
        if len(members) == 0:
            raise ValueError(f"empty group supplied at position {g}")
        bad = [j for j in members if not 0 <= j < m]
        if bad:
            raise ValueError(f"index out of range in group {g}: {bad}")
        groups.append(tuple(sorted(set(members) | set(forced))))
    return GroupSpec(groups=tuple(groups), forced=forced, n_covariates=m)


def groups_from_names(
    sample: PreSample,
    name_groups: Sequence[Sequence[str]] | None = None,
    forced_names: Sequence[str] = (),
) -> GroupSpec:
    """Like ``define_groups`` but with covariate names (the ``--groups`` JSON format).

    Covariates not named in any group become singleton groups of their own.
    """
    forced = sample.indices_of(forced_names)
    if name_groups is None:
        return define_groups(sample, "singletons", forced)
    grouping = [sample.indices_of(names) for names in name_groups]
    named = {j for members in grouping for j in members}
    grouping += [(j,) for j in range(sample.n_covariates) if j not in named]
    return define_groups(sample, grouping, forced)
