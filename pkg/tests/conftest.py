"""Shared helpers: seeded random points, tangents and splines per manifold."""

from __future__ import annotations

import numpy as np
import pytest

from splinetraj import SPD, BezierSpline, Euclidean, ManifoldPoint, Product, Sphere
from splinetraj.bezier import reconstruct_junctions


def random_point(mfd, rng, scale=1.0):
    """A valid random point; deterministic given the rng state."""
    if isinstance(mfd, Euclidean):
        return rng.normal(0.0, scale, mfd.ambient_dim)
    if isinstance(mfd, Sphere):
        x = rng.normal(size=mfd.ambient_dim)
        return x / np.linalg.norm(x)
    if isinstance(mfd, SPD):
        a = rng.normal(0.0, scale, (mfd.m, mfd.m))
        sym = 0.5 * (a + a.T)
        w, v = np.linalg.eigh(sym)
        return ((v * np.exp(w)[None, :]) @ v.T).ravel()
    if isinstance(mfd, Product):
        return np.concatenate([random_point(f, rng, scale) for f in mfd.factors])
    raise TypeError(mfd)


def random_tangent(mfd, p, rng, scale=1.0):
    """A tangent vector at p with independent normal basis coefficients."""
    basis = mfd.tangent_basis(p)
    return rng.normal(0.0, scale, mfd.dim) @ basis


def random_rotation(n, rng):
    """Haar-ish random rotation via QR with positive diagonal."""
    q, r = np.linalg.qr(rng.normal(size=(n, n)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def nearby_sphere_spline(mfd, degrees, rng, spread=0.5, closed=False):
    """Random sphere spline with control points clustered within the guard."""
    center = random_point(mfd, rng)
    n_pts = sum(degrees) + (0 if closed else 1)
    ctrl = np.stack(
        [mfd.exp(center, random_tangent(mfd, center, rng, spread)) for _ in range(n_pts)]
    )
    ctrl = reconstruct_junctions(mfd, tuple(degrees), closed, ctrl)
    return BezierSpline.from_array(mfd, tuple(degrees), closed, ctrl)


def euclidean_spline(degrees, ctrl, closed=False):
    arr = np.asarray(ctrl, dtype=float)
    return BezierSpline.from_array(Euclidean(arr.shape[1]), tuple(degrees), closed, arr)


def random_euclidean_spline(degrees, dim, rng, closed=False):
    mfd = Euclidean(dim)
    n_pts = sum(degrees) + (0 if closed else 1)
    ctrl = reconstruct_junctions(mfd, tuple(degrees), closed, rng.normal(size=(n_pts, dim)))
    return BezierSpline.from_array(mfd, tuple(degrees), closed, ctrl)


def point(mfd, coords):
    return ManifoldPoint(np.asarray(coords, dtype=float), mfd)


def sphere_point(theta, phi):
    """Spherical parametrization of S^2: longitude theta, latitude phi."""
    return ManifoldPoint(
        [np.cos(theta) * np.cos(phi), np.sin(theta) * np.cos(phi), np.sin(phi)], Sphere(2)
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
