"""Spline-space tests: curve distances, discrete geodesics, mean trajectories."""

import numpy as np
import pytest

from splinetraj import (
    BezierSpline,
    DomainError,
    Euclidean,
    SplineSpace,
    Sphere,
    discrete_geodesic,
    discrete_path_energy,
    l2_curve_dist2,
    mean_trajectory,
    spline_distance,
    validate,
)
from conftest import euclidean_spline, nearby_sphere_spline, random_euclidean_spline, sphere_point


def constant_spline(value, dim=1):
    return euclidean_spline((1,), [[value] * dim, [value] * dim])


def trapezoid_l2(f_sq, L, m):
    """Independent composite trapezoid rule over [0, L], m nodes per segment."""
    total = 0.0
    h = 1.0 / (m - 1)
    for seg in range(L):
        ts = np.linspace(seg, seg + 1, m)
        vals = f_sq(ts)
        total += h * (0.5 * vals[0] + vals[1:-1].sum() + 0.5 * vals[-1])
    return total


# ---------------------------------------------------------------------------
# curve distance and path energy
# ---------------------------------------------------------------------------


def test_l2_zero_for_identical(rng):
    B = random_euclidean_spline((3,), 2, rng)
    assert l2_curve_dist2(B, B) == 0.0


def test_l2_constant_offset():
    assert l2_curve_dist2(constant_spline(0.0), constant_spline(1.0)) == pytest.approx(1.0, abs=1e-14)


def test_l2_linear_vs_constant_trapezoid_value():
    B0 = constant_spline(0.0)
    B1 = euclidean_spline((1,), [[0.0], [1.0]])
    got = l2_curve_dist2(B0, B1, quadrature_m=5)
    # hand trapezoid of t^2 at {0, .25, .5, .75, 1}
    expected = trapezoid_l2(lambda ts: ts**2, 1, 5)
    assert expected == pytest.approx(0.34375, abs=1e-15)
    assert got == pytest.approx(expected, abs=1e-14)
    assert abs(got - 1.0 / 3.0) < 0.011


def test_l2_structure_mismatch_raises(rng):
    B1 = random_euclidean_spline((3,), 2, rng)
    B2 = random_euclidean_spline((2,), 2, rng)
    with pytest.raises(DomainError):
        l2_curve_dist2(B1, B2)


def test_path_energy_examples():
    c0, ch, c1 = constant_spline(0.0), constant_spline(0.5), constant_spline(1.0)
    assert discrete_path_energy([c0, c0, c0]) == 0.0
    assert discrete_path_energy([c0, c1]) == pytest.approx(l2_curve_dist2(c0, c1), abs=1e-15)
    assert discrete_path_energy([c0, ch, c1]) == pytest.approx(2 * (0.25 + 0.25), abs=1e-14)


# ---------------------------------------------------------------------------
# discrete geodesics
# ---------------------------------------------------------------------------


def test_geodesic_identical_endpoints_is_constant(rng):
    B = random_euclidean_spline((3,), 2, rng)
    path = discrete_geodesic(B, B, 3)
    assert path.energy == 0.0
    assert path.converged
    for spline in path.splines:
        assert np.array_equal(spline.control_array(), B.control_array())


def test_geodesic_n1_is_endpoint_pair(rng):
    B1 = random_euclidean_spline((3,), 2, rng)
    B2 = random_euclidean_spline((3,), 2, rng)
    path = discrete_geodesic(B1, B2, 1)
    assert path.splines == (B1, B2)
    assert path.energy == pytest.approx(l2_curve_dist2(B1, B2), abs=1e-14)


def test_geodesic_euclidean_midpoint_closed_form(rng):
    B1 = random_euclidean_spline((3,), 2, rng)
    B2 = random_euclidean_spline((3,), 2, rng)
    path = discrete_geodesic(B1, B2, 2)
    assert path.converged
    mid = 0.5 * (B1.control_array() + B2.control_array())
    assert np.max(np.abs(path.splines[1].control_array() - mid)) < 1e-8
    # energy of the linear path computed independently
    diff = B2.control_array() - B1.control_array()
    mid_spline = euclidean_spline((3,), mid)
    expected = 2 * (l2_curve_dist2(B1, mid_spline) + l2_curve_dist2(mid_spline, B2))
    assert path.energy == pytest.approx(expected, abs=1e-8)


def test_geodesic_rejects_bad_n(rng):
    B = random_euclidean_spline((2,), 1, rng)
    with pytest.raises(ValueError):
        discrete_geodesic(B, B, 0)


def test_geodesic_endpoints_never_move(rng):
    S = Sphere(2)
    B1 = nearby_sphere_spline(S, (3,), rng, 0.3)
    B2 = nearby_sphere_spline(S, (3,), rng, 0.3)
    path = discrete_geodesic(B1, B2, 3)
    assert path.splines[0] == B1
    assert path.splines[-1] == B2


def test_geodesic_energy_trace_non_increasing(rng):
    S = Sphere(2)
    B1 = nearby_sphere_spline(S, (3,), rng, 0.35)
    B2 = nearby_sphere_spline(S, (3,), rng, 0.35)
    path = discrete_geodesic(B1, B2, 3)
    trace = np.array(path.energy_trace)
    assert np.all(np.diff(trace) <= 1e-15)


def test_geodesic_reversal_symmetry(rng):
    S = Sphere(2)
    B1 = nearby_sphere_spline(S, (3,), rng, 0.3)
    B2 = nearby_sphere_spline(S, (3,), rng, 0.3)
    fwd = discrete_geodesic(B1, B2, 2)
    bwd = discrete_geodesic(B2, B1, 2)
    for a, b in zip(fwd.splines, reversed(bwd.splines)):
        assert np.max(np.abs(a.control_array() - b.control_array())) < 1e-5


def test_geodesic_outputs_validate(rng):
    S = Sphere(2)
    B1 = nearby_sphere_spline(S, (2, 3), rng, 0.25)
    B2 = nearby_sphere_spline(S, (2, 3), rng, 0.25)
    path = discrete_geodesic(B1, B2, 2)
    for spline in path.splines:
        assert validate(spline) == []


def test_euclidean_energy_independent_of_n(rng):
    B1 = random_euclidean_spline((3,), 3, rng)
    B2 = random_euclidean_spline((3,), 3, rng)
    energies = [discrete_geodesic(B1, B2, n).energy for n in (1, 2, 3, 4)]
    assert max(energies) - min(energies) < 1e-8


# ---------------------------------------------------------------------------
# spline distance
# ---------------------------------------------------------------------------


def test_distance_zero_on_identity(rng):
    B = random_euclidean_spline((2,), 2, rng)
    assert spline_distance(B, B, 2) == 0.0


def test_distance_of_unit_offset_constants():
    assert spline_distance(constant_spline(0.0), constant_spline(1.0), 3) == pytest.approx(
        1.0, abs=1e-7
    )


def test_distance_n1_matches_l2(rng):
    B1 = random_euclidean_spline((3,), 2, rng)
    B2 = random_euclidean_spline((3,), 2, rng)
    assert spline_distance(B1, B2, 1) == pytest.approx(np.sqrt(l2_curve_dist2(B1, B2)), abs=1e-14)


def test_distance_symmetric(rng):
    S = Sphere(2)
    B1 = nearby_sphere_spline(S, (3,), rng, 0.3)
    B2 = nearby_sphere_spline(S, (3,), rng, 0.3)
    d1 = spline_distance(B1, B2, 2)
    d2 = spline_distance(B2, B1, 2)
    assert abs(d1 - d2) < 1e-6


# ---------------------------------------------------------------------------
# mean trajectory
# ---------------------------------------------------------------------------


def test_mean_single_subject(rng):
    B = random_euclidean_spline((3,), 2, rng)
    result = mean_trajectory([B], 2)
    assert result.total_energy == 0.0
    assert result.converged
    assert np.array_equal(result.mean.control_array(), B.control_array())
    assert result.paths[0].splines[0] == result.mean


def test_mean_two_identical_subjects(rng):
    B = random_euclidean_spline((3,), 2, rng)
    result = mean_trajectory([B, B], 2)
    assert result.total_energy < 1e-20
    assert np.max(np.abs(result.mean.control_array() - B.control_array())) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3])
def test_mean_euclidean_is_arithmetic(n, rng):
    subjects = [random_euclidean_spline((3,), 2, rng) for _ in range(6)]
    result = mean_trajectory(subjects, n)
    avg = np.mean([B.control_array() for B in subjects], axis=0)
    assert np.max(np.abs(result.mean.control_array() - avg)) < 1e-6
    assert result.converged
    trace = np.array(result.energy_trace)
    assert np.all(np.diff(trace) <= 1e-15)
    for p in result.paths:
        assert p.splines[0] == result.mean
    assert result.total_energy == pytest.approx(sum(p.energy for p in result.paths), abs=1e-10)


def test_mean_mirrored_sphere_subjects_on_equator():
    up = BezierSpline(Sphere(2), (1,), False, (sphere_point(-0.6, 0.4), sphere_point(0.6, 0.4)))
    down = BezierSpline(Sphere(2), (1,), False, (sphere_point(-0.6, -0.4), sphere_point(0.6, -0.4)))
    result = mean_trajectory([up, down], 2)
    z = result.mean.control_array()[:, 2]
    assert np.max(np.abs(z)) < 1e-5
    assert result.converged


def test_mean_rejects_empty_and_mismatched(rng):
    with pytest.raises(ValueError):
        mean_trajectory([], 2)
    B1 = random_euclidean_spline((3,), 2, rng)
    B2 = random_euclidean_spline((2,), 2, rng)
    with pytest.raises(DomainError):
        mean_trajectory([B1, B2], 2)


def test_mean_workers_match_serial(rng):
    subjects = [nearby_sphere_spline(Sphere(2), (2,), rng, 0.25) for _ in range(4)]
    serial = mean_trajectory(subjects, 2, workers=1)
    parallel = mean_trajectory(subjects, 2, workers=4)
    assert np.array_equal(serial.mean.control_array(), parallel.mean.control_array())
    assert serial.total_energy == parallel.total_energy


def test_mean_outputs_validate(rng):
    subjects = [nearby_sphere_spline(Sphere(2), (3,), rng, 0.3) for _ in range(3)]
    result = mean_trajectory(subjects, 2)
    assert validate(result.mean) == []
    for path in result.paths:
        for spline in path.splines:
            assert validate(spline) == []


# ---------------------------------------------------------------------------
# spline space structure
# ---------------------------------------------------------------------------


def test_spline_space_rejects_bad_closure():
    with pytest.raises(ValueError):
        SplineSpace(Euclidean(2), (2, 3), closed=True)
    with pytest.raises(ValueError):
        SplineSpace(Euclidean(2), (3,), closed=True)


def test_spline_space_node_times():
    space = SplineSpace(Euclidean(1), (3,))
    assert np.allclose(space.node_times(), [0, 1 / 3, 2 / 3, 1])
    space2 = SplineSpace(Euclidean(1), (3, 3))
    assert np.allclose(space2.node_times(), np.arange(7) * (2 / 6))
