"""Least-squares Bezier spline regression on a manifold.

Given time-stamped samples (t_j, q_j), the regression objective is the
sum-of-squared geodesic residuals

    E(p_0, ..., p_K) = 1/2 * sum_j w_j d(B(t_j), q_j)^2

minimized over the distinct control points of a spline of fixed structure.
The C1 junction condition is enforced by parametrization: every interior
junction point is treated as determined by its two neighbours, so the free
variables form a product of manifolds and all iterates are valid splines.

The solver is Riemannian gradient descent with Armijo backtracking.  The
gradient is computed by central finite differences along a metric-orthonormal
tangent basis at each free control point (step 1e-6 * (1 + |p|)); junction
points are re-derived inside every perturbed evaluation so the constraint is
maintained.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bezier import (
    BezierSpline,
    _eval_coords,
    distinct_count,
    free_indices,
    reconstruct_junctions,
)
from .errors import ConvergenceError, DomainError
from .manifolds import Manifold, ManifoldPoint, TangentVector

_ARMIJO_C = 1e-4
_MIN_STEP = 1e-16
_FD_SCALE = 1e-6


@dataclass(frozen=True, eq=False)
class RegressionProblem:
    """Samples plus the spline structure to fit.

    Sample times are mapped affinely onto the spline domain [0, L] (smallest
    time to 0, largest to L), so they must not all coincide.  Samples are
    reordered into a canonical order (by time, then coordinates, then weight)
    at construction; together with the index-based initialization tie-break
    this makes :func:`fit` invariant to the input sample order, bit for bit.
    """

    samples: tuple[tuple[float, ManifoldPoint], ...]
    degrees: tuple[int, ...]
    closed: bool = False
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        samples = tuple((float(t), q) for t, q in self.samples)
        degrees = tuple(int(k) for k in self.degrees)
        if len(samples) < 1:
            raise ValueError("regression needs at least one sample")
        if any(k < 1 for k in degrees):
            raise ValueError(f"segment degrees must all be >= 1, got {degrees}")
        mfd = samples[0][1].manifold
        for t, q in samples:
            if not np.isfinite(t):
                raise ValueError("sample times must be finite")
            if q.manifold != mfd:
                raise DomainError("all samples must lie on the same manifold")
        times = np.array([t for t, _ in samples])
        if times.max() == times.min():
            raise ValueError("sample times must not all be equal")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if len(w) != len(samples):
                raise ValueError("weights must match the number of samples")
            if any(x < 0 for x in w):
                raise ValueError("weights must be nonnegative")
        else:
            w = None
        order = self._canonical_order(samples, w)
        object.__setattr__(self, "samples", tuple(samples[i] for i in order))
        object.__setattr__(
            self, "weights", None if w is None else tuple(w[i] for i in order)
        )
        object.__setattr__(self, "degrees", degrees)
        object.__setattr__(self, "closed", bool(self.closed))

    @staticmethod
    def _canonical_order(samples, weights) -> np.ndarray:
        times = np.array([t for t, _ in samples])
        coords = np.stack([q.coords for _, q in samples])
        keys = [np.asarray(weights if weights is not None else np.zeros(len(samples)))]
        keys.extend(coords[:, j] for j in range(coords.shape[1] - 1, -1, -1))
        keys.append(times)
        return np.lexsort(tuple(keys))

    @property
    def manifold(self) -> Manifold:
        return self.samples[0][1].manifold

    @property
    def num_segments(self) -> int:
        return len(self.degrees)

    @property
    def time_range(self) -> tuple[float, float]:
        times = [t for t, _ in self.samples]
        return min(times), max(times)

    def scaled_times(self) -> np.ndarray:
        """Sample times mapped affinely onto [0, L]."""
        tmin, tmax = self.time_range
        times = np.array([t for t, _ in self.samples])
        return (times - tmin) * (len(self.degrees) / (tmax - tmin))

    def target_array(self) -> np.ndarray:
        return np.stack([q.coords for _, q in self.samples])

    def weight_array(self) -> np.ndarray:
        if self.weights is None:
            return np.ones(len(self.samples))
        return np.array(self.weights)


@dataclass(frozen=True)
class FitOptions:
    """Solver options for :func:`fit`.

    ``tol`` bounds the relative energy decrease per step and, unless
    ``grad_tol`` overrides it, the gradient norm; either criterion stops the
    iteration.  Setting ``tol=0`` disables the energy criterion (useful when
    the residual floor is large relative to the progress still being made).
    ``initial`` warm-starts from an existing spline of matching structure
    instead of the nearest-sample initialization.
    """

    max_iter: int = 500
    tol: float = 1e-8
    grad_tol: float | None = None
    initial: BezierSpline | None = None


@dataclass(frozen=True)
class RegressionResult:
    spline: BezierSpline
    final_energy: float
    iterations: int
    converged: bool
    energy_trace: tuple[float, ...]
    underdetermined: bool


def _sample_arrays(B: BezierSpline, samples, weights):
    times = np.array([float(t) for t, _ in samples])
    for _, q in samples:
        if q.manifold != B.manifold:
            raise DomainError("samples must lie on the spline's manifold")
    targets = np.stack([q.coords for _, q in samples])
    w = np.ones(len(samples)) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != times.shape:
        raise ValueError("weights must match the number of samples")
    return times, targets, w


def objective(B: BezierSpline, samples, weights=None) -> float:
    """Weighted sum-of-squared residual energy of the spline on the samples.

    ``samples`` are (t, point) pairs with t already in the spline domain
    [0, L].  Zero exactly when every sample lies on the spline.
    """
    times, targets, w = _sample_arrays(B, samples, weights)
    return float(
        _objective_coords(B.manifold, B.degrees, B.closed, B.control_array(), times, targets, w)
    )


def _objective_coords(manifold, degrees, closed, ctrl, times, targets, weights):
    pts = _eval_coords(manifold, degrees, closed, ctrl, times)
    resid = manifold.dist(pts, targets)
    return 0.5 * np.sum(weights * resid**2, axis=-1)


def _gradient_coords(manifold, degrees, closed, ctrl, times, targets, weights, free):
    """Riemannian finite-difference gradient w.r.t. each distinct control point.

    Returns (grad, grad_norm_sq); rows of junction-dependent points are zero.
    All 2 * |free| * dim perturbed configurations are evaluated in one batch.
    """
    n_pts, amb = ctrl.shape
    d = manifold.dim
    bases = [manifold.tangent_basis(ctrl[i]) for i in free]
    hs = [_FD_SCALE * (1.0 + float(np.linalg.norm(ctrl[i]))) for i in free]
    configs = np.broadcast_to(ctrl, (2 * d * len(free), n_pts, amb)).copy()
    for fi, i in enumerate(free):
        row = 2 * d * fi
        configs[row : row + d, i, :] = manifold.exp(ctrl[i], hs[fi] * bases[fi])
        configs[row + d : row + 2 * d, i, :] = manifold.exp(ctrl[i], -hs[fi] * bases[fi])
    configs = reconstruct_junctions(manifold, degrees, closed, configs)
    energies = _objective_coords(manifold, degrees, closed, configs, times, targets, weights)
    grad = np.zeros_like(ctrl)
    for fi, i in enumerate(free):
        row = 2 * d * fi
        quot = (energies[row : row + d] - energies[row + d : row + 2 * d]) / (2.0 * hs[fi])
        grad[i] = quot @ bases[fi]
    gnorm_sq = float(np.sum(manifold.inner(ctrl, grad, grad)))
    return grad, gnorm_sq


@dataclass
class _FitState:
    ctrl: np.ndarray
    energy: float
    trace: list
    iterations: int
    converged: bool


def _fit_coords(
    manifold,
    degrees,
    closed,
    times,
    targets,
    weights,
    init_ctrl,
    *,
    max_iter,
    tol,
    grad_tol,
) -> _FitState:
    """Armijo-backtracked Riemannian gradient descent over the free control points."""
    free = free_indices(degrees, closed)
    ctrl = reconstruct_junctions(manifold, degrees, closed, init_ctrl)
    energy = float(_objective_coords(manifold, degrees, closed, ctrl, times, targets, weights))
    trace = [energy]
    iterations = 0
    converged = False
    for _ in range(max_iter):
        grad, gnorm_sq = _gradient_coords(
            manifold, degrees, closed, ctrl, times, targets, weights, free
        )
        if np.sqrt(gnorm_sq) <= grad_tol:
            converged = True
            break
        alpha = 1.0
        accepted = None
        feasible = False
        while alpha >= _MIN_STEP:
            try:
                trial = ctrl.copy()
                trial[free, :] = manifold.exp(ctrl[free, :], -alpha * grad[free, :])
                trial = reconstruct_junctions(manifold, degrees, closed, trial)
                e_trial = float(
                    _objective_coords(manifold, degrees, closed, trial, times, targets, weights)
                )
                feasible = True
                if e_trial <= energy - _ARMIJO_C * alpha * gnorm_sq:
                    accepted = (trial, e_trial)
                    break
            except DomainError:
                pass  # trial left the geodesically safe region; shrink the step
            alpha *= 0.5
        if accepted is None:
            if not feasible:
                raise ConvergenceError(
                    "line search found no geometrically feasible step at any size"
                )
            break  # no descent left at finite-difference resolution
        ctrl, e_new = accepted
        iterations += 1
        trace.append(e_new)
        rel_drop = (energy - e_new) / max(energy, 1e-300)
        energy = e_new
        if tol > 0 and rel_drop < tol:
            converged = True
            break
    return _FitState(ctrl, energy, trace, iterations, converged)


def gradient(B: BezierSpline, samples, weights=None) -> list[TangentVector]:
    """Riemannian gradient of :func:`objective` w.r.t. each distinct control point.

    Junction-dependent points are not free variables; their entries are zero
    vectors.  Doubling all weights doubles every gradient vector exactly.
    """
    times, targets, w = _sample_arrays(B, samples, weights)
    grad, _ = _gradient_coords(
        B.manifold,
        B.degrees,
        B.closed,
        B.control_array(),
        times,
        targets,
        w,
        free_indices(B.degrees, B.closed),
    )
    return [TangentVector(grad[i], p) for i, p in enumerate(B.control_points)]


def _nearest_sample_init(problem: RegressionProblem) -> np.ndarray:
    """Place control point i at the sample whose rescaled time is nearest its node.

    Node times are i*L/K for open splines; closed splines use the K+1 cyclic
    nodes (i+1)*L/(K+1) mod L, matching the seam point sitting at t = 0.  Ties
    resolve to the lower canonical sample index.
    """
    times = problem.scaled_times()
    targets = problem.target_array()
    n_pts = distinct_count(problem.degrees, problem.closed)
    L = len(problem.degrees)
    if problem.closed:
        nodes = np.mod((np.arange(n_pts) + 1) * (L / n_pts), L)
    else:
        nodes = np.arange(n_pts) * (L / (n_pts - 1))
    picks = [int(np.argmin(np.abs(times - node))) for node in nodes]
    return targets[picks].copy()


def fit(problem: RegressionProblem, options: FitOptions | None = None) -> RegressionResult:
    """Minimize the regression energy over the spline's free control points.

    Deterministic: the nearest-sample initialization, the backtracking line
    search (Armijo constant 1e-4, halving from step 1.0) and the
    finite-difference gradients are all pure functions of the canonicalized
    problem.  Convergence means the relative energy decrease fell below
    ``tol`` or the gradient norm fell below ``grad_tol``; running out of
    iterations (or of representable descent) reports ``converged=False``
    rather than raising.  Fits with fewer samples than free control points
    are permitted and flagged ``underdetermined``.
    """
    opts = options or FitOptions()
    grad_tol = opts.tol if opts.grad_tol is None else opts.grad_tol
    mfd = problem.manifold
    if opts.initial is not None:
        ini = opts.initial
        if (
            ini.manifold != mfd
            or ini.degrees != problem.degrees
            or ini.closed != problem.closed
        ):
            raise DomainError("initial spline structure does not match the problem")
        init_ctrl = ini.control_array()
    else:
        init_ctrl = _nearest_sample_init(problem)
    state = _fit_coords(
        mfd,
        problem.degrees,
        problem.closed,
        problem.scaled_times(),
        problem.target_array(),
        problem.weight_array(),
        init_ctrl,
        max_iter=opts.max_iter,
        tol=opts.tol,
        grad_tol=grad_tol,
    )
    spline = BezierSpline.from_array(mfd, problem.degrees, problem.closed, state.ctrl)
    n_free = len(free_indices(problem.degrees, problem.closed))
    return RegressionResult(
        spline=spline,
        final_energy=state.energy,
        iterations=state.iterations,
        converged=state.converged,
        energy_trace=tuple(state.trace),
        underdetermined=len(problem.samples) < n_free,
    )
