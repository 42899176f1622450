"""Discrete geodesic calculus on the space of Bezier splines.

Splines of a fixed structure (segment count, degrees, closed flag) form a
space carrying the functional metric: the inner product of two perturbations
is the integral of the pointwise tangent inner products along the curve.  A
path between two splines has an energy; discretizing the path into n+1
splines gives the discrete path energy

    E_n = n * sum_{j=0..n-1} integral d(B_j(t), B_{j+1}(t))^2 dt

(the curve-space L2 distances of consecutive path elements, evaluated by a
composite trapezoid rule).  A discrete n-geodesic minimizes E_n with its
endpoints fixed; it is computed by alternating spline regression: each inner
path element is refit to equidistant samples of its two neighbours until the
energy settles.  The mean trajectory of several subjects minimizes the sum of
discrete path energies from the mean to every subject, alternating between
recomputing the per-subject discrete geodesics and refitting the mean to the
path elements adjacent to it.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bezier import BezierSpline, _eval_coords, distinct_count, reconstruct_junctions
from .errors import DomainError
from .manifolds import Manifold, frechet_mean
from .regression import _fit_coords

# inner regression solves in Algorithms below stop on the gradient norm alone:
# their residual floor is generally nonzero, which starves a relative-energy
# criterion long before the control points stop moving
_INNER_MAX_ITER = 1000
_INNER_GRAD_TOL = 1e-9

_ENERGY_SLACK = 1e-12  # tolerated relative energy increase from quadrature mismatch


@dataclass(frozen=True)
class SplineSpace:
    """The fixed structure (manifold, degrees, closed) all member splines share."""

    manifold: Manifold
    degrees: tuple[int, ...]
    closed: bool = False

    def __post_init__(self):
        object.__setattr__(self, "degrees", tuple(int(k) for k in self.degrees))
        object.__setattr__(self, "closed", bool(self.closed))
        if len(self.degrees) < 1 or any(k < 1 for k in self.degrees):
            raise ValueError(f"segment degrees must all be >= 1, got {self.degrees}")
        if self.closed:
            if len(self.degrees) < 2:
                raise ValueError("closed splines need more than one segment")
            if self.degrees[0] < 3 or self.degrees[-1] < 3:
                raise ValueError(
                    "closed splines need first and last segments of degree >= 3"
                )

    @classmethod
    def of(cls, B: BezierSpline) -> "SplineSpace":
        return cls(B.manifold, B.degrees, B.closed)

    @property
    def num_segments(self) -> int:
        return len(self.degrees)

    @property
    def num_control_points(self) -> int:
        return distinct_count(self.degrees, self.closed)

    def node_times(self) -> np.ndarray:
        """The K+1 equidistant sample parameters i*L/K used by the algorithms."""
        K = self.num_control_points - 1
        return np.arange(K + 1) * (self.num_segments / K)

    def check_member(self, B: BezierSpline) -> None:
        if SplineSpace.of(B) != self:
            raise DomainError(
                "spline structure does not match this spline space "
                f"(expected degrees={self.degrees}, closed={self.closed}, {self.manifold})"
            )

    def spline(self, ctrl: np.ndarray) -> BezierSpline:
        return BezierSpline.from_array(self.manifold, self.degrees, self.closed, ctrl)


@dataclass(frozen=True)
class DiscretePath:
    """A discrete path (n+1 splines) with its discrete path energy."""

    splines: tuple[BezierSpline, ...]
    energy: float
    converged: bool = True
    energy_trace: tuple[float, ...] = ()

    @property
    def n(self) -> int:
        return len(self.splines) - 1


@dataclass(frozen=True)
class MeanResult:
    """Mean trajectory plus the per-subject discrete geodesics to it.

    ``paths[s]`` runs from the mean (index 0) to subject s (index n);
    ``total_energy`` is the sum of the path energies.
    """

    mean: BezierSpline
    paths: tuple[DiscretePath, ...]
    total_energy: float
    iterations: int
    converged: bool
    energy_trace: tuple[float, ...] = ()


def _quadrature(L: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite trapezoid nodes/weights, m equidistant samples per segment."""
    if m < 2:
        raise ValueError(f"quadrature needs at least 2 samples per segment, got {m}")
    h = 1.0 / (m - 1)
    w_seg = np.full(m, h)
    w_seg[0] = w_seg[-1] = 0.5 * h
    nodes = np.concatenate([np.linspace(i, i + 1.0, m) for i in range(L)])
    weights = np.concatenate([w_seg] * L)
    return nodes, weights


def _l2_coords(space: SplineSpace, c1: np.ndarray, c2: np.ndarray, nodes, weights) -> float:
    a = _eval_coords(space.manifold, space.degrees, space.closed, c1, nodes)
    b = _eval_coords(space.manifold, space.degrees, space.closed, c2, nodes)
    return float(np.sum(weights * space.manifold.dist(a, b) ** 2))


def l2_curve_dist2(B1: BezierSpline, B2: BezierSpline, quadrature_m: int = 5) -> float:
    """Squared L2 curve distance: integral of d(B1(t), B2(t))^2 over [0, L].

    Approximated by a composite trapezoid rule with ``quadrature_m``
    equidistant samples per segment.
    """
    space = SplineSpace.of(B1)
    space.check_member(B2)
    nodes, weights = _quadrature(space.num_segments, quadrature_m)
    return _l2_coords(space, B1.control_array(), B2.control_array(), nodes, weights)


def _path_energy_coords(space, ctrls, nodes, weights) -> float:
    n = len(ctrls) - 1
    return n * sum(
        _l2_coords(space, ctrls[j], ctrls[j + 1], nodes, weights) for j in range(n)
    )


def discrete_path_energy(path: DiscretePath | Sequence[BezierSpline], quadrature_m: int = 5) -> float:
    """n times the sum of squared L2 distances of consecutive path elements."""
    splines = path.splines if isinstance(path, DiscretePath) else tuple(path)
    if len(splines) < 2:
        raise ValueError("a discrete path needs at least 2 splines")
    space = SplineSpace.of(splines[0])
    for B in splines[1:]:
        space.check_member(B)
    nodes, weights = _quadrature(space.num_segments, quadrature_m)
    return _path_energy_coords(space, [B.control_array() for B in splines], nodes, weights)


def _refit(space: SplineSpace, times, targets, init_ctrl) -> np.ndarray:
    state = _fit_coords(
        space.manifold,
        space.degrees,
        space.closed,
        times,
        targets,
        np.ones(len(times)),
        init_ctrl,
        max_iter=_INNER_MAX_ITER,
        tol=0.0,
        grad_tol=_INNER_GRAD_TOL,
    )
    return state.ctrl


def discrete_geodesic(
    B1: BezierSpline,
    B2: BezierSpline,
    n: int,
    *,
    quadrature_m: int = 5,
    tol: float = 1e-6,
    max_sweeps: int = 100,
) -> DiscretePath:
    """Discrete n-geodesic between two splines of the same space.

    The inner path elements start on the geodesics connecting corresponding
    control points (element j at parameter j/n) and are then repeatedly
    replaced by the spline regression fit to the 2(K+1) samples taken from
    both neighbouring elements at the node parameters i*L/K, sweeping
    j = 1, ..., n-1 with immediate updates, until the relative energy decrease
    drops below ``tol``.  The endpoints never move.
    """
    if n < 1:
        raise ValueError(f"discretization parameter n must be >= 1, got {n}")
    space = SplineSpace.of(B1)
    space.check_member(B2)
    nodes, weights = _quadrature(space.num_segments, quadrature_m)
    c_first = B1.control_array()
    c_last = B2.control_array()
    if n == 1:
        energy = _l2_coords(space, c_first, c_last, nodes, weights)
        return DiscretePath((B1, B2), energy, True, (energy,))
    ctrls = [c_first]
    for j in range(1, n):
        inner = space.manifold.geodesic(j / n, c_first, c_last)
        ctrls.append(reconstruct_junctions(space.manifold, space.degrees, space.closed, inner))
    ctrls.append(c_last)

    node_ts = space.node_times()
    times2 = np.concatenate([node_ts, node_ts])
    energy = _path_energy_coords(space, ctrls, nodes, weights)
    trace = [energy]
    converged = False
    for _ in range(max_sweeps):
        previous = [c.copy() for c in ctrls[1:n]]
        for j in range(1, n):
            targets = np.concatenate(
                [
                    _eval_coords(space.manifold, space.degrees, space.closed, ctrls[j - 1], node_ts),
                    _eval_coords(space.manifold, space.degrees, space.closed, ctrls[j + 1], node_ts),
                ]
            )
            ctrls[j] = _refit(space, times2, targets, ctrls[j])
        e_new = _path_energy_coords(space, ctrls, nodes, weights)
        if e_new > energy * (1.0 + _ENERGY_SLACK):
            # regression nodes and the energy quadrature disagree below tol;
            # keep the monotone iterate
            ctrls[1:n] = previous
            converged = True
            break
        trace.append(e_new)
        rel_drop = (energy - e_new) / max(energy, 1e-300)
        energy = e_new
        if rel_drop < tol:
            converged = True
            break
    splines = (B1,) + tuple(space.spline(c) for c in ctrls[1:n]) + (B2,)
    return DiscretePath(splines, energy, converged, tuple(trace))


def spline_distance(B1: BezierSpline, B2: BezierSpline, n: int = 2, *, quadrature_m: int = 5) -> float:
    """Distance induced by the functional metric: sqrt of the n-geodesic energy."""
    path = discrete_geodesic(B1, B2, n, quadrature_m=quadrature_m)
    return float(np.sqrt(max(path.energy, 0.0)))


def mean_trajectory(
    subjects: Sequence[BezierSpline],
    n: int = 2,
    *,
    quadrature_m: int = 5,
    tol: float = 1e-6,
    max_iter: int = 50,
    workers: int | None = None,
) -> MeanResult:
    """Discrete n-mean of the subject splines.

    Control points of the mean start at the Frechet means of the subjects'
    corresponding control points.  Each round recomputes the discrete
    n-geodesic from the current mean to every subject and refits the mean to
    the S*(K+1) node samples of the path elements adjacent to it, until the
    total energy stalls (relative decrease below ``tol``) or ``max_iter`` mean
    updates were made.  ``workers`` > 1 computes the per-subject geodesics in
    a thread pool; results are identical to the serial ones.
    """
    if len(subjects) == 0:
        raise ValueError("mean_trajectory needs at least one subject spline")
    space = SplineSpace.of(subjects[0])
    for B in subjects[1:]:
        space.check_member(B)

    init = np.stack(
        [
            frechet_mean([Bs.control_points[i] for Bs in subjects]).coords
            for i in range(space.num_control_points)
        ]
    )
    init = reconstruct_junctions(space.manifold, space.degrees, space.closed, init)
    mean = space.spline(init)

    node_ts = space.node_times()
    times_all = np.concatenate([node_ts] * len(subjects))

    def all_paths(current: BezierSpline) -> list[DiscretePath]:
        def one(B: BezierSpline) -> DiscretePath:
            return discrete_geodesic(current, B, n, quadrature_m=quadrature_m)

        if workers is not None and workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(one, subjects))
        return [one(B) for B in subjects]

    trace: list[float] = []
    updates = 0
    converged = False
    paths = all_paths(mean)
    energy = sum(p.energy for p in paths)
    trace.append(energy)
    for _ in range(max_iter):
        if energy < 1e-30:
            converged = True
            break
        targets = np.concatenate(
            [
                _eval_coords(
                    space.manifold,
                    space.degrees,
                    space.closed,
                    p.splines[1].control_array(),
                    node_ts,
                )
                for p in paths
            ]
        )
        new_ctrl = _refit(space, times_all, targets, mean.control_array())
        new_mean = space.spline(new_ctrl)
        new_paths = all_paths(new_mean)
        new_energy = sum(p.energy for p in new_paths)
        if new_energy > energy * (1.0 + _ENERGY_SLACK):
            converged = True
            break
        mean, paths = new_mean, new_paths
        updates += 1
        trace.append(new_energy)
        rel_drop = (energy - new_energy) / max(energy, 1e-300)
        energy = new_energy
        if rel_drop < tol:
            converged = True
            break
    return MeanResult(
        mean=mean,
        paths=tuple(paths),
        total_energy=energy,
        iterations=updates,
        converged=converged,
        energy_trace=tuple(trace),
    )
