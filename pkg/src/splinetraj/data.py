"""Subject-level sample containers for longitudinal datasets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .manifolds import Manifold, ManifoldPoint


@dataclass(frozen=True, eq=False)
class SubjectSeries:
    """One subject's time-stamped manifold samples (t_i, q_i)."""

    id: str
    times: tuple[float, ...]
    points: tuple[ManifoldPoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "points", tuple(self.points))
        if not self.id:
            raise ValueError("subject id must be nonempty")
        if "/" in self.id or "\\" in self.id:
            raise ValueError(f"subject id {self.id!r} must not contain path separators")
        if len(self.times) != len(self.points):
            raise ValueError(f"subject {self.id!r}: times and points differ in length")
        if len(self.points) < 1:
            raise ValueError(f"subject {self.id!r} needs at least one sample")
        if not all(np.isfinite(t) for t in self.times):
            raise ValueError(f"subject {self.id!r}: sample times must be finite")
        mfd = self.points[0].manifold
        for q in self.points[1:]:
            if q.manifold != mfd:
                raise DomainError(f"subject {self.id!r}: samples on different manifolds")

    @property
    def manifold(self) -> Manifold:
        return self.points[0].manifold

    def samples(self) -> tuple[tuple[float, ManifoldPoint], ...]:
        return tuple(zip(self.times, self.points))

    def __eq__(self, other):
        return (
            isinstance(other, SubjectSeries)
            and self.id == other.id
            and self.times == other.times
            and self.points == other.points
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Dataset:
    """A cohort of subject series on one manifold."""

    manifold: Manifold
    subjects: tuple[SubjectSeries, ...]

    def __post_init__(self):
        object.__setattr__(self, "subjects", tuple(self.subjects))
        ids = [s.id for s in self.subjects]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate subject ids: {dup}")
        for s in self.subjects:
            if s.manifold != self.manifold:
                raise DomainError(f"subject {s.id!r} is not on the dataset manifold")

    def __eq__(self, other):
        return (
            isinstance(other, Dataset)
            and self.manifold == other.manifold
            and self.subjects == other.subjects
        )

    __hash__ = None
