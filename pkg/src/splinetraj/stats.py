"""Trajectory-level statistics around a mean trajectory.

Subject trajectories are compared to the mean pointwise: at a grid of sample
parameters the log map from the mean curve to each subject curve yields a
field of tangent vectors ("difference fields").  The functional metric turns
these fields into a Gram matrix by integrating their pointwise inner products
(trapezoid rule), after centering the fields per sample time.  Principal
geodesic analysis is then realized kernel-style: the eigendecomposition of
the centered Gram matrix gives the principal modes, and each subject's score
on mode l is sqrt(lambda_l) times its eigenvector entry.

The module also generates seeded synthetic cohorts by scattering isotropic
Gaussian tangent noise around a ground-truth spline.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bezier import BezierSpline, _eval_coords
from .data import SubjectSeries
from .errors import DomainError
from .hierarchy import SplineSpace
from .manifolds import ManifoldPoint, TangentVector

_EIG_DROP = 1e-12  # modes with eigenvalue below this fraction of the largest are dropped


@dataclass(frozen=True, eq=False)
class GramAnalysis:
    """Eigendecomposition of the centered trajectory Gram matrix.

    ``eigenvalues`` holds the full descending spectrum; ``scores`` has one
    column per retained mode (eigenvalue above 1e-12 of the largest), so at
    most S-1 columns survive the centering.  Score columns sum to zero over
    the subjects.
    """

    gram: np.ndarray
    eigenvalues: tuple[float, ...]
    scores: np.ndarray
    sample_times: tuple[float, ...] | None = None
    mean_ref: BezierSpline | None = None

    def __post_init__(self):
        g = np.array(self.gram, dtype=float)
        g.flags.writeable = False
        s = np.array(self.scores, dtype=float)
        s.flags.writeable = False
        object.__setattr__(self, "gram", g)
        object.__setattr__(self, "scores", s)
        object.__setattr__(self, "eigenvalues", tuple(float(x) for x in self.eigenvalues))

    @property
    def num_modes(self) -> int:
        return self.scores.shape[1]


def _field_times(space: SplineSpace, m: int) -> np.ndarray:
    if m < 2:
        raise ValueError(f"need at least 2 samples per segment, got {m}")
    L = space.num_segments
    return np.linspace(0.0, L, m * L)


def trajectory_fields(
    mean: BezierSpline, subjects: Sequence[BezierSpline], m: int = 5
) -> list[list[TangentVector]]:
    """Per-subject difference fields log_{mean(t_i)}(B_s(t_i)).

    The sample parameters are m*L equidistant times covering [0, L].  A
    cut-locus failure reports the offending subject and time.
    """
    space = SplineSpace.of(mean)
    for B in subjects:
        space.check_member(B)
    ts = _field_times(space, m)
    base = _eval_coords(space.manifold, space.degrees, space.closed, mean.control_array(), ts)
    base_points = [ManifoldPoint(row, space.manifold) for row in base]
    fields: list[list[TangentVector]] = []
    for s, B in enumerate(subjects):
        pts = _eval_coords(space.manifold, space.degrees, space.closed, B.control_array(), ts)
        try:
            vecs = space.manifold.log(base, pts)
        except DomainError:
            for i, t in enumerate(ts):
                try:
                    space.manifold.log(base[i], pts[i])
                except DomainError as err:
                    raise DomainError(f"subject {s} at t={t:.6g}: {err}") from None
            raise
        fields.append([TangentVector(v, p) for v, p in zip(vecs, base_points)])
    return fields


def gram_matrix(
    fields: Sequence[Sequence[TangentVector]],
    mean: BezierSpline,
    weights: np.ndarray | None = None,
) -> np.ndarray:
    """S x S Gram matrix of the centered difference fields.

    G[s, s'] = sum_i w_i <v_s,i - vbar_i, v_s',i - vbar_i> at base mean(t_i),
    with trapezoid weights summing to L by default.  Scaling all fields by a
    scales G by a^2.
    """
    if len(fields) < 1:
        raise ValueError("gram_matrix needs at least one field")
    space = SplineSpace.of(mean)
    T = len(fields[0])
    if any(len(f) != T for f in fields):
        raise ValueError("all fields must share the same sample times")
    base = np.stack([v.base.coords for v in fields[0]])
    for f in fields[1:]:
        for i, v in enumerate(f):
            if not np.array_equal(v.base.coords, base[i]):
                raise ValueError("fields were not extracted at a common set of base points")
    vecs = np.stack([[v.coords for v in f] for f in fields])  # (S, T, amb)
    vecs = vecs - vecs.mean(axis=0, keepdims=True)
    if weights is None:
        L = space.num_segments
        h = L / (T - 1)
        weights = np.full(T, h)
        weights[0] = weights[-1] = 0.5 * h
    else:
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (T,):
            raise ValueError("weights must have one entry per sample time")
    S = len(fields)
    gram = np.zeros((S, S))
    for i in range(T):
        gram += weights[i] * space.manifold.inner(
            base[i], vecs[:, None, i, :], vecs[None, :, i, :]
        )
    return 0.5 * (gram + gram.T)


def pga_scores(
    G: np.ndarray,
    *,
    sample_times: Sequence[float] | None = None,
    mean_ref: BezierSpline | None = None,
) -> GramAnalysis:
    """Principal modes and subject scores from a centered Gram matrix.

    Eigenvectors get a canonical sign (largest-magnitude entry positive) so
    reordering subjects permutes the score rows identically.
    """
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError(f"Gram matrix must be square, got shape {G.shape}")
    if np.max(np.abs(G - G.T)) > 1e-8:
        raise ValueError("Gram matrix must be symmetric")
    w, v = np.linalg.eigh(0.5 * (G + G.T))
    scale = max(float(w.max()), 0.0)
    if np.any(w < -1e-8 * max(scale, 1.0)):
        raise DomainError(
            f"Gram matrix must be positive semidefinite, smallest eigenvalue {float(w.min()):.3g}"
        )
    order = np.argsort(w)[::-1]
    w = w[order]
    v = v[:, order]
    keep = w > _EIG_DROP * scale if scale > 0 else np.zeros(len(w), dtype=bool)
    scores = np.empty((G.shape[0], int(keep.sum())))
    col = 0
    for k in range(len(w)):
        if not keep[k]:
            continue
        vec = v[:, k]
        pivot = int(np.argmax(np.abs(vec)))
        if vec[pivot] < 0:
            vec = -vec
        scores[:, col] = np.sqrt(w[k]) * vec
        col += 1
    return GramAnalysis(
        gram=G,
        eigenvalues=tuple(float(x) for x in w),
        scores=scores,
        sample_times=None if sample_times is None else tuple(float(t) for t in sample_times),
        mean_ref=mean_ref,
    )


def pga_pipeline(
    mean: BezierSpline, subjects: Sequence[BezierSpline], m: int = 5
) -> GramAnalysis:
    """Convenience: difference fields -> Gram matrix -> PGA scores."""
    fields = trajectory_fields(mean, subjects, m)
    space = SplineSpace.of(mean)
    gram = gram_matrix(fields, mean)
    return pga_scores(
        gram, sample_times=tuple(_field_times(space, m)), mean_ref=mean
    )


@dataclass(frozen=True, eq=False)
class SyntheticSpec:
    """Recipe for a seeded synthetic cohort around a ground-truth spline.

    ``times`` holds one time tuple per subject.  Subject s draws its noise
    from a stream seeded by (seed, s), so generation is reproducible sample
    by sample and may be parallelized per subject.
    """

    ground_truth: BezierSpline
    noise_sigma: float
    times: tuple[tuple[float, ...], ...]
    seed: int

    def __post_init__(self):
        times = tuple(tuple(float(t) for t in ts) for ts in self.times)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "noise_sigma", float(self.noise_sigma))
        object.__setattr__(self, "seed", int(self.seed))
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if len(times) < 1 or any(len(ts) < 1 for ts in times):
            raise ValueError("every subject needs at least one sample time")
        radius = self.ground_truth.manifold.convexity_radius
        if self.noise_sigma >= radius:
            raise DomainError(
                f"noise_sigma {self.noise_sigma:g} exceeds the convexity guard {radius:g}"
            )

    @classmethod
    def shared_times(
        cls,
        ground_truth: BezierSpline,
        noise_sigma: float,
        times: Sequence[float],
        n_subjects: int,
        seed: int,
    ) -> "SyntheticSpec":
        return cls(ground_truth, noise_sigma, (tuple(times),) * int(n_subjects), seed)

    @property
    def n_subjects(self) -> int:
        return len(self.times)


def synthesize(spec: SyntheticSpec) -> list[SubjectSeries]:
    """Draw a cohort: q = exp(B_gt(t), eps) with isotropic tangent noise.

    eps has independent N(0, sigma^2) components in a metric-orthonormal
    tangent basis at the curve point.  The same spec always produces the same
    cohort.
    """
    gt = spec.ground_truth
    mfd = gt.manifold
    radius = mfd.convexity_radius
    width = max(2, len(str(spec.n_subjects - 1)))
    out = []
    for s, ts in enumerate(spec.times):
        rng = np.random.default_rng((spec.seed, s))
        bases = _eval_coords(mfd, gt.degrees, gt.closed, gt.control_array(), np.asarray(ts))
        points = []
        for i, t in enumerate(ts):
            eta = rng.normal(0.0, spec.noise_sigma, mfd.dim)
            if spec.noise_sigma == 0.0:
                points.append(ManifoldPoint(bases[i], mfd))
                continue
            v = eta @ mfd.tangent_basis(bases[i])
            if np.linalg.norm(eta) >= radius:
                raise DomainError(
                    f"subject {s} at t={t:.6g}: drawn noise exceeds the convexity guard"
                )
            points.append(ManifoldPoint(mfd.exp(bases[i], v), mfd))
        out.append(SubjectSeries(f"s{s:0{width}d}", ts, tuple(points)))
    return out
