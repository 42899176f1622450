"""Geometry kernel tests: closed-form examples, round trips, invariants."""

import numpy as np
import pytest

from splinetraj import (
    SPD,
    ConvergenceError,
    DomainError,
    Euclidean,
    ManifoldPoint,
    Product,
    Sphere,
    TangentVector,
    dist,
    exp,
    frechet_mean,
    geodesic,
    inner,
    log,
    norm,
)
from conftest import point, random_point, random_rotation, random_tangent

MANIFOLDS = [
    Euclidean(1),
    Euclidean(3),
    Sphere(2),
    Sphere(4),
    SPD(2),
    SPD(3),
    Product((Euclidean(2), Sphere(2))),
    Product((Sphere(2), SPD(2))),
]


def ids(m):
    return f"{m.kind}{getattr(m, 'd', getattr(m, 'm', ''))}" if m.kind != "product" else "product"


# ---------------------------------------------------------------------------
# closed-form examples
# ---------------------------------------------------------------------------


def test_sphere_exp_quarter_circle():
    p = point(Sphere(2), [1, 0, 0])
    v = TangentVector([0, np.pi / 2, 0], p)
    assert np.allclose(exp(p, v).coords, [0, 1, 0], atol=1e-15)


def test_euclidean_exp_is_addition():
    p = point(Euclidean(2), [1, 2])
    v = TangentVector([3, -1], p)
    assert np.allclose(exp(p, v).coords, [4, 1])


def test_spd_exp_of_diagonal():
    p = point(SPD(2), np.eye(2).ravel())
    v = TangentVector(np.eye(2).ravel(), p)
    assert np.allclose(exp(p, v).coords, (np.e * np.eye(2)).ravel(), atol=1e-12)


def test_sphere_log_inverts_exp_example():
    p = point(Sphere(2), [1, 0, 0])
    q = point(Sphere(2), [0, 1, 0])
    assert np.allclose(log(p, q).coords, [0, np.pi / 2, 0], atol=1e-15)


def test_euclidean_log_is_difference():
    p = point(Euclidean(3), [1, 2, 3])
    q = point(Euclidean(3), [0, 1, 5])
    assert np.allclose(log(p, q).coords, [-1, -1, 2])


def test_spd_log_of_diagonal():
    p = point(SPD(2), np.eye(2).ravel())
    q = point(SPD(2), (4 * np.eye(2)).ravel())
    assert np.allclose(log(p, q).coords, (np.log(4) * np.eye(2)).ravel(), atol=1e-12)


def test_dist_examples():
    assert dist(point(Sphere(2), [1, 0, 0]), point(Sphere(2), [0, 0, 1])) == pytest.approx(
        np.pi / 2, abs=1e-12
    )
    assert dist(
        point(SPD(3), np.eye(3).ravel()), point(SPD(3), (np.e * np.eye(3)).ravel())
    ) == pytest.approx(np.sqrt(3), abs=1e-12)
    assert dist(point(Euclidean(2), [0, 0]), point(Euclidean(2), [3, 4])) == pytest.approx(5.0)


def test_geodesic_examples():
    p = point(Sphere(2), [1, 0, 0])
    q = point(Sphere(2), [0, 1, 0])
    mid = geodesic(0.5, p, q)
    assert np.allclose(mid.coords, [np.sqrt(2) / 2, np.sqrt(2) / 2, 0], atol=1e-15)
    a = point(Euclidean(2), [1, 1])
    b = point(Euclidean(2), [3, 5])
    assert np.allclose(geodesic(0.25, a, b).coords, [1.5, 2.0])


@pytest.mark.parametrize("mfd", MANIFOLDS, ids=ids)
def test_geodesic_endpoints_exact(mfd, rng):
    p = point(mfd, random_point(mfd, rng))
    q = point(mfd, random_point(mfd, rng))
    if isinstance(mfd, (Sphere, Product)) and dist(p, q) >= mfd.convexity_radius:
        q = geodesic(0.5, p, q)  # keep within the guard
    assert geodesic(0.0, p, q) == p
    assert geodesic(1.0, p, q) == q


def test_inner_examples():
    p = point(Euclidean(2), [5, 5])
    assert inner(TangentVector([1, 0], p), TangentVector([0, 1], p)) == 0.0
    pi = point(SPD(2), np.eye(2).ravel())
    u = TangentVector(np.eye(2).ravel(), pi)
    assert inner(u, u) == pytest.approx(2.0, abs=1e-14)
    ps = point(Sphere(2), [1, 0, 0])
    assert inner(TangentVector([0, 2, 0], ps), TangentVector([0, 3, 0], ps)) == pytest.approx(6.0)


# ---------------------------------------------------------------------------
# randomized invariants
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("mfd", MANIFOLDS, ids=ids)
def test_exp_log_round_trip(mfd, rng):
    for _ in range(30):
        p = random_point(mfd, rng)
        v = random_tangent(mfd, p, rng, 0.3)
        nv = mfd.norm(p, v)
        if nv > 1.0:
            v = v / nv
        back = mfd.log(p, mfd.exp(p, v))
        assert np.max(np.abs(back - v)) < 1e-7


@pytest.mark.parametrize("mfd", MANIFOLDS, ids=ids)
def test_dist_matches_log_norm_and_symmetry(mfd, rng):
    for _ in range(10):
        p = random_point(mfd, rng)
        q = mfd.exp(p, random_tangent(mfd, p, rng, 0.4))
        d = float(mfd.dist(p, q))
        assert abs(d - float(mfd.norm(p, mfd.log(p, q)))) < 1e-10
        assert abs(d - float(mfd.dist(q, p))) < 1e-10
        assert float(mfd.dist(p, p)) == 0.0


@pytest.mark.parametrize("mfd", MANIFOLDS, ids=ids)
def test_exp_preserves_distance(mfd, rng):
    for _ in range(10):
        p = random_point(mfd, rng)
        v = random_tangent(mfd, p, rng, 0.3)
        d = float(mfd.dist(p, mfd.exp(p, v)))
        assert abs(d - float(mfd.norm(p, v))) < 1e-8


@pytest.mark.parametrize("mfd", MANIFOLDS, ids=ids)
def test_geodesic_proportional_distance_and_speed(mfd, rng):
    p = random_point(mfd, rng)
    q = mfd.exp(p, random_tangent(mfd, p, rng, 0.5))
    d = float(mfd.dist(p, q))
    for t in (0.25, 0.5, 0.8):
        g = mfd.geodesic(t, p, q)
        assert abs(float(mfd.dist(p, g)) - t * d) < 1e-8
    h = 1e-3
    speeds = [float(mfd.dist(mfd.geodesic(t, p, q), mfd.geodesic(t + h, p, q))) / h for t in (0.1, 0.45, 0.85)]
    assert max(speeds) - min(speeds) < 1e-5 * max(1.0, d)


def test_sphere_rotation_equivariance(rng):
    mfd = Sphere(2)
    for _ in range(5):
        p = random_point(mfd, rng)
        q = mfd.exp(p, random_tangent(mfd, p, rng, 0.7))
        rot = random_rotation(3, rng)
        for t in (0.3, 0.6):
            left = rot @ mfd.geodesic(t, p, q)
            right = mfd.geodesic(t, rot @ p, rot @ q)
            assert np.max(np.abs(left - right)) < 1e-9


def test_product_ops_match_componentwise(rng):
    e, s = Euclidean(2), Sphere(2)
    mfd = Product((e, s))
    for _ in range(10):
        p = random_point(mfd, rng)
        q = mfd.exp(p, random_tangent(mfd, p, rng, 0.4))
        v = random_tangent(mfd, p, rng, 0.4)
        u = random_tangent(mfd, p, rng, 0.4)
        pe, ps = p[:2], p[2:]
        qe, qs = q[:2], q[2:]
        assert np.max(np.abs(mfd.exp(p, v) - np.concatenate([e.exp(pe, v[:2]), s.exp(ps, v[2:])]))) < 1e-12
        assert np.max(np.abs(mfd.log(p, q) - np.concatenate([e.log(pe, qe), s.log(ps, qs)]))) < 1e-12
        d = np.hypot(float(e.dist(pe, qe)), float(s.dist(ps, qs)))
        assert abs(float(mfd.dist(p, q)) - d) < 1e-12
        want = float(e.inner(pe, u[:2], v[:2]) + s.inner(ps, u[2:], v[2:]))
        assert abs(float(mfd.inner(p, u, v)) - want) < 1e-12


@pytest.mark.parametrize("mfd", MANIFOLDS, ids=ids)
def test_tangent_basis_is_metric_orthonormal(mfd, rng):
    p = random_point(mfd, rng)
    basis = mfd.tangent_basis(p)
    assert basis.shape == (mfd.dim, mfd.ambient_dim)
    gram = np.array([[float(mfd.inner(p, a, b)) for b in basis] for a in basis])
    assert np.max(np.abs(gram - np.eye(mfd.dim))) < 1e-10
    for b in basis:
        mfd.check_tangent(p, b)


# ---------------------------------------------------------------------------
# Frechet mean
# ---------------------------------------------------------------------------


def test_frechet_mean_single_point():
    p = point(Sphere(2), [0, 0, 1])
    assert frechet_mean([p]) == p


def test_frechet_mean_euclidean_is_arithmetic(rng):
    mfd = Euclidean(3)
    pts = [point(mfd, rng.normal(size=3)) for _ in range(7)]
    mean = frechet_mean(pts)
    assert np.allclose(mean.coords, np.mean([p.coords for p in pts], axis=0), atol=1e-12)


def test_frechet_mean_sphere_symmetric_pair():
    p = point(Sphere(2), [1, 0, 0])
    q = point(Sphere(2), [0, 1, 0])
    mean = frechet_mean([p, q])
    assert np.allclose(mean.coords, [np.sqrt(2) / 2, np.sqrt(2) / 2, 0], atol=1e-8)


@pytest.mark.parametrize("mfd", MANIFOLDS, ids=ids)
def test_frechet_mean_first_order_condition(mfd, rng):
    center = random_point(mfd, rng)
    pts = [point(mfd, mfd.exp(center, random_tangent(mfd, center, rng, 0.3))) for _ in range(6)]
    weights = rng.uniform(0.5, 1.5, 6)
    weights = weights / weights.sum()
    mean = frechet_mean(pts, weights)
    g = sum(w * log(mean, q).coords for w, q in zip(weights, pts))
    assert norm(TangentVector(g, mean)) < 1e-8


def test_frechet_mean_weight_validation():
    pts = [point(Euclidean(1), [0.0]), point(Euclidean(1), [1.0])]
    with pytest.raises(ValueError):
        frechet_mean(pts, [0.3, 0.3])
    with pytest.raises(ValueError):
        frechet_mean(pts, [-0.5, 1.5])
    with pytest.raises(ValueError):
        frechet_mean([])


def test_frechet_mean_nonconvergence_raises():
    p = point(Euclidean(1), [0.0])
    q = point(Euclidean(1), [1.0])
    with pytest.raises(ConvergenceError):
        frechet_mean([p, q], max_iter=0)


# ---------------------------------------------------------------------------
# domain errors and validation
# ---------------------------------------------------------------------------


def test_point_validation():
    with pytest.raises(DomainError):
        ManifoldPoint([1.0, 1.0, 0.0], Sphere(2))
    with pytest.raises(DomainError):
        ManifoldPoint([1.0, 0.5, 0.0, 1.0], SPD(2))  # not symmetric
    with pytest.raises(DomainError):
        ManifoldPoint((-np.eye(2)).ravel(), SPD(2))  # not positive definite
    with pytest.raises(DomainError):
        ManifoldPoint([1.0, 2.0], Euclidean(3))  # wrong length


def test_tangent_validation():
    p = point(Sphere(2), [1, 0, 0])
    with pytest.raises(DomainError):
        TangentVector([1.0, 0.0, 0.0], p)  # not orthogonal to base


def test_exp_guard_and_base_mismatch():
    p = point(Sphere(2), [1, 0, 0])
    q = point(Sphere(2), [0, 1, 0])
    v = TangentVector([0, 3.2, 0], p)
    with pytest.raises(DomainError):
        exp(p, v)  # |v| >= pi
    with pytest.raises(DomainError):
        exp(q, v)  # v is based at p, not q
    with pytest.raises(DomainError):
        inner(TangentVector([0, 1, 0], p), TangentVector([1, 0, 0], q))


def test_log_antipodal_raises():
    p = point(Sphere(2), [1, 0, 0])
    q = point(Sphere(2), [-1, 0, 0])
    with pytest.raises(DomainError):
        log(p, q)


def test_dist_mismatched_manifolds():
    with pytest.raises(DomainError):
        dist(point(Euclidean(2), [0, 0]), point(Sphere(1), [1, 0]))


def test_points_are_immutable():
    p = point(Euclidean(2), [1.0, 2.0])
    with pytest.raises(ValueError):
        p.coords[0] = 5.0
