"""Riemannian kernel for the closed-form manifolds used throughout the library.

Supported geometries:

* ``Euclidean(d)`` -- flat R^d.
* ``Sphere(d)`` -- the unit sphere S^d stored extrinsically in R^(d+1);
  tangent vectors are ambient vectors orthogonal to the base point.
* ``SPD(m)`` -- symmetric positive definite m x m matrices with the
  affine-invariant metric, stored as row-major flattened full matrices.
* ``Product(factors)`` -- finite products of the above, coordinates
  concatenated factor by factor.

A manifold object is a stateless, hashable descriptor.  Its methods are the
low-level kernels: they act on raw coordinate arrays of shape
``(..., ambient_dim)`` and broadcast over all leading axes, which is what the
optimization loops elsewhere in the library rely on for speed.  The
module-level functions of the same names (:func:`exp`, :func:`log`, ...) wrap
these kernels in the validated :class:`ManifoldPoint` / :class:`TangentVector`
types and form the public, checked API.

All operations are pure functions of immutable values; there is no global
state and everything is safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DomainError

# tolerance for the point/tangent validity invariants
_ATOL = 1e-9
# cut-locus guard on the sphere: log/geodesic require d(p, q) < pi - _SPHERE_GAP
_SPHERE_GAP = 1e-6


class Manifold:
    """Descriptor base class; subclasses provide the closed-form kernels."""

    kind: str = ""

    @property
    def dim(self) -> int:
        """Intrinsic dimension."""
        raise NotImplementedError

    @property
    def ambient_dim(self) -> int:
        """Length of the coordinate arrays points and tangents are stored in."""
        raise NotImplementedError

    @property
    def convexity_radius(self) -> float:
        """Radius within which exp/log round trips are guaranteed."""
        return np.inf

    # -- kernels on raw coordinate arrays, broadcasting over leading axes --

    def exp(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def log(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def dist(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def inner(self, p: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def norm(self, p: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.sqrt(np.maximum(self.inner(p, v, v), 0.0))

    def geodesic(self, t, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        """Minimizing geodesic from p to q, evaluated as exp_p(t * log_p(q)).

        ``t`` broadcasts against the leading axes of ``p``/``q``.  The
        endpoints are pinned exactly: t = 0 returns p and t = 1 returns q.
        """
        t_arr = np.asarray(t, dtype=float)
        v = self.log(p, q)
        out = self.exp(p, np.expand_dims(t_arr, -1) * v)
        tb = np.broadcast_to(np.expand_dims(t_arr, -1), out.shape)
        at0 = tb == 0.0
        at1 = tb == 1.0
        if at0.any():
            out = np.where(at0, np.broadcast_to(p, out.shape), out)
        if at1.any():
            out = np.where(at1, np.broadcast_to(q, out.shape), out)
        return out

    # -- validation ------------------------------------------------------

    def check_point(self, x: np.ndarray) -> None:
        """Raise :class:`DomainError` unless ``x`` is a valid point."""
        raise NotImplementedError

    def check_tangent(self, p: np.ndarray, v: np.ndarray) -> None:
        """Raise :class:`DomainError` unless ``v`` is tangent at ``p``."""
        raise NotImplementedError

    def tangent_basis(self, p: np.ndarray) -> np.ndarray:
        """Orthonormal basis of T_p M w.r.t. the metric, shape (dim, ambient_dim).

        Deterministic in ``p``; used for finite-difference gradients and for
        drawing isotropic tangent noise.
        """
        raise NotImplementedError


def _check_finite(x: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{what} contains non-finite values")


@dataclass(frozen=True)
class Euclidean(Manifold):
    """Flat R^d with the standard inner product."""

    d: int
    kind = "euclidean"

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"Euclidean dimension must be >= 1, got {self.d}")

    @property
    def dim(self) -> int:
        return self.d

    @property
    def ambient_dim(self) -> int:
        return self.d

    def exp(self, p, v):
        return p + v

    def log(self, p, q):
        return q - p

    def dist(self, p, q):
        return np.linalg.norm(q - p, axis=-1)

    def inner(self, p, u, v):
        return np.sum(u * v, axis=-1)

    def check_point(self, x):
        _check_finite(x, "euclidean point")

    def check_tangent(self, p, v):
        _check_finite(v, "euclidean tangent")

    def tangent_basis(self, p):
        return np.eye(self.d)


@dataclass(frozen=True)
class Sphere(Manifold):
    """Unit sphere S^d in R^(d+1).

    exp_p(v) = cos(|v|) p + sin(|v|) v/|v|, log is its inverse, and the
    distance is the arc length 2 asin(|q - p| / 2).  The chord-based angle is
    used in both log and dist so the two agree to machine precision near the
    diagonal.
    """

    d: int
    kind = "sphere"

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"Sphere dimension must be >= 1, got {self.d}")

    @property
    def dim(self) -> int:
        return self.d

    @property
    def ambient_dim(self) -> int:
        return self.d + 1

    @property
    def convexity_radius(self) -> float:
        return np.pi - _SPHERE_GAP

    def exp(self, p, v):
        nv = np.linalg.norm(v, axis=-1, keepdims=True)
        if np.any(nv >= np.pi):
            raise DomainError(
                f"sphere exp needs |v| < pi for a minimizing geodesic, got {float(nv.max()):.6g}"
            )
        if np.all(nv < 1e-15):
            return p + v
        safe = np.where(nv < 1e-15, 1.0, nv)
        out = np.cos(nv) * p + np.where(nv < 1e-15, 1.0, np.sin(nv) / safe) * v
        return out / np.linalg.norm(out, axis=-1, keepdims=True)

    def _angle(self, p, q):
        chord = np.linalg.norm(q - p, axis=-1, keepdims=True)
        return 2.0 * np.arcsin(np.clip(0.5 * chord, 0.0, 1.0))

    def log(self, p, q):
        theta = self._angle(p, q)
        if np.any(theta >= np.pi - _SPHERE_GAP):
            raise DomainError(
                "sphere log undefined near the cut locus (almost antipodal points)"
            )
        u = q - np.sum(p * q, axis=-1, keepdims=True) * p
        nu = np.linalg.norm(u, axis=-1, keepdims=True)
        coef = np.where(nu < 1e-15, 1.0, theta / np.where(nu < 1e-15, 1.0, nu))
        return coef * u

    def dist(self, p, q):
        return self._angle(p, q)[..., 0]

    def inner(self, p, u, v):
        return np.sum(u * v, axis=-1)

    def check_point(self, x):
        _check_finite(x, "sphere point")
        n = np.linalg.norm(x, axis=-1)
        if np.any(np.abs(n - 1.0) > _ATOL):
            raise DomainError(
                f"sphere point must have unit norm within {_ATOL:g}, got norm {float(np.max(n)):.12g}"
            )

    def check_tangent(self, p, v):
        _check_finite(v, "sphere tangent")
        dot = np.abs(np.sum(p * v, axis=-1))
        if np.any(dot > _ATOL):
            raise DomainError(
                f"sphere tangent must be orthogonal to its base point within {_ATOL:g}"
            )

    def tangent_basis(self, p):
        basis = []
        for i in range(self.d + 1):
            v = np.zeros(self.d + 1)
            v[i] = 1.0
            v = v - np.dot(v, p) * p
            for b in basis:  # two Gram-Schmidt passes for numerical safety
                v = v - np.dot(v, b) * b
            for b in basis:
                v = v - np.dot(v, b) * b
            n = np.linalg.norm(v)
            if n > 1e-6:
                basis.append(v / n)
            if len(basis) == self.d:
                break
        return np.array(basis)


def _as_mat(x: np.ndarray, m: int) -> np.ndarray:
    return x.reshape(x.shape[:-1] + (m, m))


def _as_vec(a: np.ndarray, m: int) -> np.ndarray:
    return a.reshape(a.shape[:-2] + (m * m,))


def _symmetrize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2))


@dataclass(frozen=True)
class SPD(Manifold):
    """Symmetric positive definite m x m matrices, affine-invariant metric.

    With P^(1/2) the symmetric square root,

        exp_P(V) = P^(1/2) expm(P^(-1/2) V P^(-1/2)) P^(1/2)
        log_P(Q) = P^(1/2) logm(P^(-1/2) Q P^(-1/2)) P^(1/2)
        <U, V>_P = tr(P^-1 U P^-1 V)

    and the distance is the Frobenius norm of logm(P^(-1/2) Q P^(-1/2)).
    Matrix functions are evaluated through symmetric eigendecompositions.
    """

    m: int
    kind = "spd"

    def __post_init__(self):
        if self.m < 2:
            raise ValueError(f"SPD matrix size must be >= 2, got {self.m}")

    @property
    def dim(self) -> int:
        return self.m * (self.m + 1) // 2

    @property
    def ambient_dim(self) -> int:
        return self.m * self.m

    def _sqrt_pair(self, p):
        """(P^(1/2), P^(-1/2)) for flattened SPD coordinates."""
        w, r = np.linalg.eigh(_symmetrize(_as_mat(p, self.m)))
        if np.any(w <= 0):
            raise DomainError("base matrix is not positive definite")
        sw = np.sqrt(w)
        rt = np.swapaxes(r, -1, -2)
        return (r * sw[..., None, :]) @ rt, (r * (1.0 / sw)[..., None, :]) @ rt

    def exp(self, p, v):
        p, v = np.broadcast_arrays(p, v)
        s, si = self._sqrt_pair(p)
        a = _symmetrize(si @ _as_mat(v, self.m) @ si)
        w, q = np.linalg.eigh(a)
        e = (q * np.exp(w)[..., None, :]) @ np.swapaxes(q, -1, -2)
        return _as_vec(_symmetrize(s @ e @ s), self.m)

    def log(self, p, q):
        p, q = np.broadcast_arrays(p, q)
        s, si = self._sqrt_pair(p)
        a = _symmetrize(si @ _as_mat(q, self.m) @ si)
        w, r = np.linalg.eigh(a)
        if np.any(w <= 0):
            raise DomainError("target matrix is not positive definite")
        lg = (r * np.log(w)[..., None, :]) @ np.swapaxes(r, -1, -2)
        return _as_vec(_symmetrize(s @ lg @ s), self.m)

    def dist(self, p, q):
        p, q = np.broadcast_arrays(p, q)
        _, si = self._sqrt_pair(p)
        a = _symmetrize(si @ _as_mat(q, self.m) @ si)
        w = np.linalg.eigvalsh(a)
        if np.any(w <= 0):
            raise DomainError("target matrix is not positive definite")
        d = np.sqrt(np.sum(np.log(w) ** 2, axis=-1))
        # keep dist(p, p) exactly zero despite eigendecomposition round-off
        return np.where(np.all(p == q, axis=-1), 0.0, d)

    def inner(self, p, u, v):
        p, u, v = np.broadcast_arrays(p, u, v)
        pm = _symmetrize(_as_mat(p, self.m))
        x = np.linalg.solve(pm, _as_mat(u, self.m))
        y = np.linalg.solve(pm, _as_mat(v, self.m))
        return np.einsum("...ij,...ji->...", x, y)

    def check_point(self, x):
        _check_finite(x, "spd point")
        a = _as_mat(x, self.m)
        skew = np.max(np.abs(a - np.swapaxes(a, -1, -2)))
        if skew > _ATOL:
            raise DomainError(f"spd point must be symmetric within {_ATOL:g}, deviation {skew:.3g}")
        w = np.linalg.eigvalsh(_symmetrize(a))
        if np.any(w <= 0):
            raise DomainError(
                f"spd point must be positive definite, smallest eigenvalue {float(w.min()):.3g}"
            )

    def check_tangent(self, p, v):
        _check_finite(v, "spd tangent")
        a = _as_mat(v, self.m)
        skew = np.max(np.abs(a - np.swapaxes(a, -1, -2)))
        if skew > _ATOL:
            raise DomainError(f"spd tangent must be symmetric within {_ATOL:g}, deviation {skew:.3g}")

    def tangent_basis(self, p):
        s, _ = self._sqrt_pair(p)
        vecs = []
        for i in range(self.m):
            e = np.zeros((self.m, self.m))
            e[i, i] = 1.0
            vecs.append(_as_vec(s @ e @ s, self.m))
        inv_sqrt2 = 1.0 / np.sqrt(2.0)
        for i in range(self.m):
            for j in range(i + 1, self.m):
                e = np.zeros((self.m, self.m))
                e[i, j] = e[j, i] = inv_sqrt2
                vecs.append(_as_vec(s @ e @ s, self.m))
        return np.array(vecs)


@dataclass(frozen=True)
class Product(Manifold):
    """Product of >= 2 factor manifolds; coordinates are concatenated."""

    factors: tuple[Manifold, ...]
    kind = "product"

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if len(self.factors) < 2:
            raise ValueError("Product needs at least 2 factors")
        for f in self.factors:
            if not isinstance(f, Manifold):
                raise TypeError(f"Product factor {f!r} is not a Manifold")

    @property
    def dim(self) -> int:
        return sum(f.dim for f in self.factors)

    @property
    def ambient_dim(self) -> int:
        return sum(f.ambient_dim for f in self.factors)

    @property
    def convexity_radius(self) -> float:
        return min(f.convexity_radius for f in self.factors)

    def _blocks(self):
        out = []
        start = 0
        for f in self.factors:
            out.append((f, start, start + f.ambient_dim))
            start += f.ambient_dim
        return out

    def exp(self, p, v):
        p, v = np.broadcast_arrays(p, v)
        return np.concatenate(
            [f.exp(p[..., a:b], v[..., a:b]) for f, a, b in self._blocks()], axis=-1
        )

    def log(self, p, q):
        p, q = np.broadcast_arrays(p, q)
        return np.concatenate(
            [f.log(p[..., a:b], q[..., a:b]) for f, a, b in self._blocks()], axis=-1
        )

    def dist(self, p, q):
        d2 = sum(f.dist(p[..., a:b], q[..., a:b]) ** 2 for f, a, b in self._blocks())
        return np.sqrt(d2)

    def inner(self, p, u, v):
        return sum(
            f.inner(p[..., a:b], u[..., a:b], v[..., a:b]) for f, a, b in self._blocks()
        )

    def check_point(self, x):
        for k, (f, a, b) in enumerate(self._blocks()):
            try:
                f.check_point(x[..., a:b])
            except DomainError as err:
                raise DomainError(f"product factor {k}: {err}") from None

    def check_tangent(self, p, v):
        for k, (f, a, b) in enumerate(self._blocks()):
            try:
                f.check_tangent(p[..., a:b], v[..., a:b])
            except DomainError as err:
                raise DomainError(f"product factor {k}: {err}") from None

    def tangent_basis(self, p):
        rows = []
        for f, a, b in self._blocks():
            sub = f.tangent_basis(p[..., a:b])
            for r in sub:
                full = np.zeros(self.ambient_dim)
                full[a:b] = r
                rows.append(full)
        return np.array(rows)


# ---------------------------------------------------------------------------
# validated value types and the public functional API
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ManifoldPoint:
    """A point: a coordinate array tagged with its manifold descriptor."""

    coords: np.ndarray
    manifold: Manifold

    def __post_init__(self):
        arr = np.array(self.coords, dtype=float)
        if arr.shape != (self.manifold.ambient_dim,):
            raise DomainError(
                f"point coordinates must have shape ({self.manifold.ambient_dim},), got {arr.shape}"
            )
        self.manifold.check_point(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "coords", arr)

    def __eq__(self, other):
        return (
            isinstance(other, ManifoldPoint)
            and self.manifold == other.manifold
            and np.array_equal(self.coords, other.coords)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class TangentVector:
    """A tangent vector: coordinates plus the base point it is attached to."""

    coords: np.ndarray
    base: ManifoldPoint

    def __post_init__(self):
        arr = np.array(self.coords, dtype=float)
        if arr.shape != (self.base.manifold.ambient_dim,):
            raise DomainError(
                f"tangent coordinates must have shape ({self.base.manifold.ambient_dim},), got {arr.shape}"
            )
        self.base.manifold.check_tangent(self.base.coords, arr)
        arr.flags.writeable = False
        object.__setattr__(self, "coords", arr)

    @property
    def manifold(self) -> Manifold:
        return self.base.manifold

    def __eq__(self, other):
        return (
            isinstance(other, TangentVector)
            and self.base == other.base
            and np.array_equal(self.coords, other.coords)
        )

    __hash__ = None


def _same_manifold(a, b, what: str) -> None:
    if a.manifold != b.manifold:
        raise DomainError(f"{what} requires values on the same manifold")


def exp(p: ManifoldPoint, v: TangentVector) -> ManifoldPoint:
    """Riemannian exponential: endpoint of the geodesic leaving p with velocity v."""
    if v.base != p:
        raise DomainError("exp: tangent vector is not based at p")
    return ManifoldPoint(p.manifold.exp(p.coords, v.coords), p.manifold)


def log(p: ManifoldPoint, q: ManifoldPoint) -> TangentVector:
    """Riemannian logarithm: the initial velocity of the geodesic from p to q."""
    _same_manifold(p, q, "log")
    return TangentVector(p.manifold.log(p.coords, q.coords), p)


def dist(p: ManifoldPoint, q: ManifoldPoint) -> float:
    """Geodesic distance."""
    _same_manifold(p, q, "dist")
    return float(p.manifold.dist(p.coords, q.coords))


def geodesic(t: float, p: ManifoldPoint, q: ManifoldPoint) -> ManifoldPoint:
    """Point at parameter t on the minimizing geodesic from p to q."""
    _same_manifold(p, q, "geodesic")
    return ManifoldPoint(p.manifold.geodesic(float(t), p.coords, q.coords), p.manifold)


def inner(u: TangentVector, v: TangentVector) -> float:
    """Riemannian inner product of two tangent vectors at a shared base point."""
    if u.base != v.base:
        raise DomainError("inner: tangent vectors must share their base point")
    return float(u.manifold.inner(u.base.coords, u.coords, v.coords))


def norm(v: TangentVector) -> float:
    """Metric norm of a tangent vector."""
    return float(v.manifold.norm(v.base.coords, v.coords))


def frechet_mean(
    points: Sequence[ManifoldPoint],
    weights: Sequence[float] | None = None,
    *,
    max_iter: int = 200,
    tol: float = 1e-9,
) -> ManifoldPoint:
    """Weighted Frechet mean via fixed-point iteration.

    Iterates p <- exp_p(sum_s w_s log_p(q_s)), starting at ``points[0]``,
    until the weighted tangent mean has norm below ``tol``.  Weights must be
    nonnegative and sum to 1 (uniform by default).

    Raises :class:`ConvergenceError` after ``max_iter`` iterations.
    """
    if len(points) == 0:
        raise ValueError("frechet_mean needs at least one point")
    mfd = points[0].manifold
    for q in points[1:]:
        _same_manifold(points[0], q, "frechet_mean")
    if weights is None:
        w = np.full(len(points), 1.0 / len(points))
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(points),):
            raise ValueError("weights must match the number of points")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > 1e-8:
            raise ValueError(f"weights must sum to 1, got {w.sum():.12g}")
    arr = np.stack([q.coords for q in points])
    x = arr[0].copy()
    for _ in range(max_iter):
        g = np.sum(w[:, None] * mfd.log(x, arr), axis=0)
        if mfd.norm(x, g) < tol:
            return ManifoldPoint(x, mfd)
        x = mfd.exp(x, g)
    raise ConvergenceError(f"frechet_mean did not converge in {max_iter} iterations")
