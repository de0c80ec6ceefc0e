"""Experimental sample sizes: individual and cluster designs, and search grids."""

from __future__ import annotations

from typing import Annotated, Iterator, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, PositiveInt, model_validator

from surveyopt.core.utils import parse_range


class Individuals(BaseModel):
    """Randomize ``n`` individuals."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["individuals"] = "individuals"
    n: PositiveInt

    @property
    def effective_n(self) -> int:
        return self.n

    @property
    def key(self) -> tuple[int, int]:
        return (self.n, self.n)

    def to_json(self) -> dict[str, object]:
        return {"n": self.n}

    def __str__(self) -> str:
        return f"n={self.n}"


class Clusters(BaseModel):
    """Randomize ``c`` clusters of ``n_c`` individuals each."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["clusters"] = "clusters"
    c: PositiveInt
    n_c: PositiveInt

    @property
    def effective_n(self) -> int:
        return self.c * self.n_c

    @property
    def key(self) -> tuple[int, int]:
        return (self.effective_n, self.c)

    def to_json(self) -> dict[str, object]:
        return {"n": self.effective_n, "clusters": [self.c, self.n_c]}

    def __str__(self) -> str:
        return f"c={self.c} x n_c={self.n_c}"


SizeChoice = Annotated[Union[Individuals, Clusters], Field(discriminator="kind")]


def cluster_shape(size: Individuals | Clusters) -> tuple[int, int]:
    """(c, n_c) for a size; individual designs count each person as a cluster of one."""
    if isinstance(size, Clusters):
        return size.c, size.n_c
    return size.n, 1


class SizeGrid(BaseModel):
    """Candidate experimental sizes, strictly increasing in (effective n, c)."""

    model_config = ConfigDict(frozen=True)

    sizes: tuple[SizeChoice, ...]

    @model_validator(mode="after")
    def _check(self) -> SizeGrid:
        if not self.sizes:
            raise ValueError("size grid must be nonempty")
        keys = [s.key for s in self.sizes]
        if any(a >= b for a, b in zip(keys, keys[1:])):
            raise ValueError("size grid must be strictly increasing")
        return self

    @classmethod
    def from_range(cls, lo: int, hi: int, step: int = 1) -> SizeGrid:
        return cls(sizes=tuple(Individuals(n=n) for n in range(lo, hi + 1, step)))

    @classmethod
    def parse(cls, text: str) -> SizeGrid:
        """Grid from a ``LO:HI:STEP`` flag value."""
        return cls.from_range(*parse_range(text))

    @classmethod
    def clusters(
        cls, c_range: tuple[int, int, int], n_c_range: tuple[int, int, int]
    ) -> SizeGrid:
        """Every (c, n_c) pair from two ``(lo, hi, step)`` ranges."""
        pairs = [
            Clusters(c=c, n_c=n_c)
            for c in range(c_range[0], c_range[1] + 1, c_range[2])
            for n_c in range(n_c_range[0], n_c_range[1] + 1, n_c_range[2])
        ]
        return cls(sizes=tuple(sorted(pairs, key=lambda s: s.key)))

    def __iter__(self) -> Iterator[Individuals | Clusters]:  # type: ignore[override]
        return iter(self.sizes)

    def __len__(self) -> int:
        return len(self.sizes)

    @property
    def smallest(self) -> Individuals | Clusters:
        return self.sizes[0]

    @property
    def largest(self) -> Individuals | Clusters:
        return self.sizes[-1]

    def describe(self) -> str:
        first, last = self.smallest, self.largest
        return f"{len(self)} sizes from {first} to {last}"
