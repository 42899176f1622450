"""Manifold-valued Bezier curves and C1 splines.

A Bezier curve of order k on a manifold is produced by the generalized
de Casteljau recursion: starting from k+1 control points, each level replaces
neighbouring points by the geodesic point ``gamma(t; left, right)`` until a
single point remains.  Curves are concatenated into splines over the domain
[0, L] (one unit parameter interval per segment).  Differentiability at a
junction between segments i and i+1 holds exactly when the junction point is
the geodesic point

    gamma(k_i / (k_i + k_{i+1}); p_left, p_right)

between its two neighbouring control points; closed splines apply the same
condition cyclically across the seam (which requires the first and last
segments to be at least cubic).

Splines are stored through their distinct control points, i.e. each shared
junction point appears exactly once:

    (p^(0)_0, ..., p^(0)_{k_0}, p^(1)_1, ..., p^(1)_{k_1}, ...)

with the leading point dropped for closed splines (it coincides with the
final one).  For segment degrees k_0, ..., k_{L-1} this gives K + 1 points
where K = sum(k_i), minus 1 if closed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .manifolds import Manifold, ManifoldPoint

# junction condition tolerance used by validate(); fitted output satisfies the
# constraint by construction, so this only absorbs round-off
C1_TOL = 1e-6


def distinct_count(degrees: Sequence[int], closed: bool) -> int:
    """Number of distinct control points (K + 1)."""
    return sum(degrees) + (0 if closed else 1)


def segment_tables(degrees: Sequence[int], closed: bool) -> tuple[tuple[int, ...], ...]:
    """Per-segment indices into the distinct control point list."""
    tables = []
    if not closed:
        start = 0
        for k in degrees:
            tables.append(tuple(range(start, start + k + 1)))
            start += k
    else:
        last = distinct_count(degrees, closed) - 1
        tables.append((last,) + tuple(range(0, degrees[0])))
        start = degrees[0]
        for k in degrees[1:]:
            tables.append(tuple(range(start - 1, start + k)))
            start += k
    return tuple(tables)


@dataclass(frozen=True)
class JunctionRule:
    """Dependency of one junction point on its two neighbours.

    ``index`` is the junction's position in the distinct list; the C1
    condition fixes it to gamma(ratio; left, right).
    """

    index: int
    left: int
    right: int
    ratio: float


def junction_dependencies(degrees: Sequence[int], closed: bool) -> tuple[JunctionRule, ...]:
    """C1 junction rules, in spline order (seam last for closed splines)."""
    degrees = tuple(degrees)
    rules = []
    if not closed:
        start = 0
        for i in range(len(degrees) - 1):
            start += degrees[i]
            rules.append(
                JunctionRule(start, start - 1, start + 1, degrees[i] / (degrees[i] + degrees[i + 1]))
            )
    else:
        start = 0
        for i in range(len(degrees) - 1):
            start += degrees[i]
            rules.append(
                JunctionRule(
                    start - 1, start - 2, start, degrees[i] / (degrees[i] + degrees[i + 1])
                )
            )
        last = distinct_count(degrees, closed) - 1
        rules.append(
            JunctionRule(last, last - 1, 0, degrees[-1] / (degrees[-1] + degrees[0]))
        )
    return tuple(rules)


def free_indices(degrees: Sequence[int], closed: bool) -> tuple[int, ...]:
    """Distinct indices that are not junction-dependent."""
    dependent = {r.index for r in junction_dependencies(degrees, closed)}
    return tuple(i for i in range(distinct_count(degrees, closed)) if i not in dependent)


def reconstruct_junctions(
    manifold: Manifold, degrees: Sequence[int], closed: bool, ctrl: np.ndarray
) -> np.ndarray:
    """Overwrite junction entries of ``ctrl`` with their C1-consistent values.

    ``ctrl`` has shape (..., K+1, ambient_dim) and is not modified; the
    updated copy is returned.  When a junction neighbours another junction
    (degree-1 segments), the coupled conditions are solved by Gauss-Seidel
    iteration, which contracts since all ratios lie in (0, 1).
    """
    rules = junction_dependencies(degrees, closed)
    if not rules:
        return np.array(ctrl, dtype=float)
    out = np.array(ctrl, dtype=float)
    dependent = {r.index for r in rules}
    chained = any(r.left in dependent or r.right in dependent for r in rules)
    for _ in range(100):
        moved = 0.0
        for r in rules:
            new = manifold.geodesic(r.ratio, out[..., r.left, :], out[..., r.right, :])
            moved = max(moved, float(np.max(np.abs(new - out[..., r.index, :]))))
            out[..., r.index, :] = new
        if not chained or moved < 1e-14:
            break
    return out


def _decasteljau_coords(manifold: Manifold, ctrl: np.ndarray, t) -> np.ndarray:
    """de Casteljau recursion on raw coordinates.

    ``ctrl`` has shape (..., k+1, ambient_dim); ``t`` broadcasts against the
    leading axes.  Returns shape (..., ambient_dim).
    """
    tj = np.expand_dims(np.asarray(t, dtype=float), -1)
    b = ctrl
    for _ in range(ctrl.shape[-2] - 1):
        b = manifold.geodesic(tj, b[..., :-1, :], b[..., 1:, :])
    return b[..., 0, :]


def _eval_coords(
    manifold: Manifold,
    degrees: tuple[int, ...],
    closed: bool,
    ctrl: np.ndarray,
    ts,
) -> np.ndarray:
    """Evaluate a spline given by distinct control points at parameters ``ts``.

    ``ctrl``: (..., K+1, ambient_dim); ``ts``: scalar or (T,).  Returns
    (..., ambient_dim) or (..., T, ambient_dim) accordingly.
    """
    L = len(degrees)
    ts_arr = np.asarray(ts, dtype=float)
    scalar = ts_arr.ndim == 0
    tvec = np.atleast_1d(ts_arr)
    if closed:
        tvec = np.mod(tvec, L)
    elif np.any(tvec < 0.0) or np.any(tvec > L):
        raise DomainError(f"spline parameter outside [0, {L}]")
    seg = np.minimum(np.floor(tvec).astype(int), L - 1)
    local = tvec - seg
    tables = segment_tables(degrees, closed)
    out = np.empty(ctrl.shape[:-2] + (tvec.shape[0], manifold.ambient_dim))
    for i in np.unique(seg):
        msk = seg == i
        sub = ctrl[..., np.asarray(tables[i]), :]
        out[..., msk, :] = _decasteljau_coords(manifold, sub[..., None, :, :], local[msk])
    return out[..., 0, :] if scalar else out


@dataclass(frozen=True, eq=False)
class BezierSpline:
    """A C1 spline of L Bezier segments, stored by its distinct control points.

    The segment degrees and the closed flag fix the structure; the
    ``control_points`` tuple holds the K+1 distinct points in spline order.
    Construction enforces the structural invariants (count, shared manifold);
    the geometric C1 condition is checked by :func:`validate`.
    Instances are immutable and evaluation is pure, so they are safe to share
    across threads.
    """

    manifold: Manifold
    degrees: tuple[int, ...]
    closed: bool
    control_points: tuple[ManifoldPoint, ...]

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(int(k) for k in self.degrees))
        object.__setattr__(self, "closed", bool(self.closed))
        object.__setattr__(self, "control_points", tuple(self.control_points))
        if len(self.degrees) < 1 or any(k < 1 for k in self.degrees):
            raise ValueError(f"segment degrees must all be >= 1, got {self.degrees}")
        want = distinct_count(self.degrees, self.closed)
        if len(self.control_points) != want:
            raise ValueError(
                f"expected {want} distinct control points for degrees {self.degrees} "
                f"(closed={self.closed}), got {len(self.control_points)}"
            )
        for p in self.control_points:
            if not isinstance(p, ManifoldPoint):
                raise TypeError("control points must be ManifoldPoint values")
            if p.manifold != self.manifold:
                raise DomainError("control point manifold does not match the spline manifold")

    @property
    def num_segments(self) -> int:
        return len(self.degrees)

    @property
    def domain_length(self) -> float:
        """The spline is parametrized over [0, L]."""
        return float(len(self.degrees))

    def control_array(self) -> np.ndarray:
        """Distinct control point coordinates stacked to (K+1, ambient_dim)."""
        return np.stack([p.coords for p in self.control_points])

    def segment_control_points(self, i: int) -> tuple[ManifoldPoint, ...]:
        """Control points of segment ``i`` (junction points shared by value)."""
        table = segment_tables(self.degrees, self.closed)[i]
        return tuple(self.control_points[j] for j in table)

    @classmethod
    def from_array(
        cls, manifold: Manifold, degrees: Sequence[int], closed: bool, ctrl: np.ndarray
    ) -> "BezierSpline":
        points = tuple(ManifoldPoint(row, manifold) for row in np.asarray(ctrl, dtype=float))
        return cls(manifold, tuple(degrees), closed, points)

    def __eq__(self, other):
        return (
            isinstance(other, BezierSpline)
            and self.manifold == other.manifold
            and self.degrees == other.degrees
            and self.closed == other.closed
            and len(self.control_points) == len(other.control_points)
            and all(a == b for a, b in zip(self.control_points, other.control_points))
        )

    __hash__ = None


def de_casteljau(t: float, control: Sequence[ManifoldPoint]) -> ManifoldPoint:
    """Evaluate the Bezier curve of the given control points at t in [0, 1].

    Endpoints interpolate exactly: t=0 gives the first control point and t=1
    the last.
    """
    if len(control) < 2:
        raise ValueError("de_casteljau needs at least 2 control points (order k >= 1)")
    mfd = control[0].manifold
    for p in control[1:]:
        if p.manifold != mfd:
            raise DomainError("control points must share one manifold")
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"curve parameter must lie in [0, 1], got {t}")
    ctrl = np.stack([p.coords for p in control])
    return ManifoldPoint(_decasteljau_coords(mfd, ctrl, t), mfd)


def eval_spline(B: BezierSpline, t: float) -> ManifoldPoint:
    """Evaluate the spline at parameter t.

    For open splines t must lie in [0, L]; segment i = min(floor(t), L-1) is
    evaluated at the local parameter t - i.  Closed splines accept any real t,
    reduced modulo L.
    """
    coords = _eval_coords(B.manifold, B.degrees, B.closed, B.control_array(), float(t))
    return ManifoldPoint(coords, B.manifold)


def distinct_control_points(
    segments: Sequence[Sequence[ManifoldPoint]], closed: bool
) -> tuple[ManifoldPoint, ...]:
    """Merge per-segment control point lists into the distinct list.

    Consecutive segments must share their junction point (the last point of
    segment i equals the first point of segment i+1; cyclically for closed
    splines).  Raises ValueError when the shared points disagree.
    """
    if len(segments) < 1 or any(len(s) < 2 for s in segments):
        raise ValueError("need at least one segment with at least two control points")
    pairs = [(i, i + 1) for i in range(len(segments) - 1)]
    if closed:
        pairs.append((len(segments) - 1, 0))
    for i, j in pairs:
        a, b = segments[i][-1], segments[j][0]
        if a.manifold != b.manifold or np.max(np.abs(a.coords - b.coords)) > 1e-12:
            raise ValueError(f"segments {i} and {j} disagree on their shared junction point")
    distinct = list(segments[0]) if not closed else list(segments[0][1:])
    for seg in segments[1:]:
        distinct.extend(seg[1:])
    return tuple(distinct)


def segments_from_distinct(B: BezierSpline) -> tuple[tuple[ManifoldPoint, ...], ...]:
    """Per-segment control point views of a spline (inverse of the merge)."""
    return tuple(B.segment_control_points(i) for i in range(B.num_segments))


@dataclass(frozen=True)
class SplineViolation:
    """One failed spline invariant; ``junction`` indexes the offending joint."""

    kind: str
    junction: int | None
    magnitude: float | None
    message: str


def validate(B: BezierSpline) -> list[SplineViolation]:
    """Check the geometric spline invariants; returns [] when all hold.

    Reported violations: closed splines whose structure breaks the closure
    rule (more than one segment, first and last at least cubic), and junction
    points further than ``C1_TOL`` from their C1-consistent location.  Never
    raises.
    """
    violations: list[SplineViolation] = []
    if B.closed:
        if B.num_segments < 2:
            violations.append(
                SplineViolation(
                    "closure-structure", None, None, "closed splines need more than one segment"
                )
            )
        if B.degrees[0] < 3:
            violations.append(
                SplineViolation(
                    "closure-degree",
                    None,
                    None,
                    f"closed splines need a first segment of degree >= 3, got {B.degrees[0]}",
                )
            )
        if B.degrees[-1] < 3:
            violations.append(
                SplineViolation(
                    "closure-degree",
                    None,
                    None,
                    f"closed splines need a last segment of degree >= 3, got {B.degrees[-1]}",
                )
            )
    ctrl = B.control_array()
    mfd = B.manifold
    for j, rule in enumerate(junction_dependencies(B.degrees, B.closed)):
        try:
            expected = mfd.geodesic(rule.ratio, ctrl[rule.left], ctrl[rule.right])
            dev = float(mfd.dist(expected, ctrl[rule.index]))
        except DomainError as err:
            violations.append(
                SplineViolation("evaluation-error", j, None, f"junction {j}: {err}")
            )
            continue
        if dev > C1_TOL:
            violations.append(
                SplineViolation(
                    "c1-junction",
                    j,
                    dev,
                    f"junction {j} is {dev:.3g} away from its C1-consistent location",
                )
            )
    return violations
