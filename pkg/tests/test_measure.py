import math

import mpmath
import pytest

from instability.core import RejectedInputError
from instability.measure import (
    bound_curve, feature_preimage_factor, log_ball_volume, orbit_volume_bound,
    resolution_mitigation_curve, tail_is_monotone,
)
from instability.symmetry import SymmetryClass

IMG, GRAPH = SymmetryClass.IMAGE_POLY, SymmetryClass.GRAPH_FACTORIAL


def mp_log_ball(k, eps, dps=60):
    with mpmath.workdps(dps):
        k = mpmath.mpf(k)
        return k / 2 * mpmath.log(mpmath.pi) - mpmath.loggamma(k / 2 + 1) + k * mpmath.log(mpmath.mpf(eps))


@pytest.mark.parametrize("k, eps, expected", [
    (2, 1.0, math.log(math.pi)),
    (3, 1.0, math.log(4 * math.pi / 3)),
    (1, 0.5, 0.0),
])
def test_log_ball_volume_closed_forms(k, eps, expected):
    assert log_ball_volume(k, eps) == pytest.approx(expected, abs=1e-12)


def test_log_ball_volume_reference_digits():
    assert log_ball_volume(2, 1.0) == pytest.approx(1.1447298858, abs=1e-10)
    assert log_ball_volume(3, 1.0) == pytest.approx(1.4324119583, abs=1e-10)


@pytest.mark.parametrize("k", [100, 1000, 10_000])
@pytest.mark.parametrize("eps", [0.1, 0.5, 1.0, 3.0])
def test_log_ball_volume_against_mpmath(k, eps):
    ref = float(mp_log_ball(k, eps))
    assert abs(log_ball_volume(k, eps) - ref) <= 1e-9 * abs(ref)


@pytest.mark.parametrize("k, eps", [(0, 1.0), (2, 0.0), (2, -1.0), (2.5, 1.0)])
def test_log_ball_volume_rejects_bad_input(k, eps):
    with pytest.raises(RejectedInputError):
        log_ball_volume(k, eps)


def test_unit_ball_volume_peaks_at_five():
    v = {k: log_ball_volume(k, 1.0) for k in range(1, 30)}
    assert max(v, key=v.get) == 5
    assert v[5] > v[4] and v[5] > v[6]


def test_subunit_radius_volume_decreasing_past_peak():
    vals = [log_ball_volume(k, 0.9) for k in range(10, 200)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_large_radius_volume_still_vanishes():
    assert log_ball_volume(10_000, 3.0) < -10_000


@pytest.mark.parametrize("k", [1, 7, 100, 5000])
def test_scaling_law(k):
    a = 1.7
    diff = log_ball_volume(k, 0.3 * a) - log_ball_volume(k, 0.3)
    assert diff == pytest.approx(k * math.log(a), abs=1e-12 * max(1.0, k))


def test_orbit_bound_examples():
    assert orbit_volume_bound(2, 1.0, IMG) == pytest.approx(math.log(4) + math.log(math.pi), abs=1e-12)
    with mpmath.workdps(60):
        img_ref = mpmath.log(100**2) + mp_log_ball(100, 0.5)
        graph_ref = mpmath.loggamma(101) + mp_log_ball(100, 0.5)
    img = orbit_volume_bound(100, 0.5, IMG)
    graph = orbit_volume_bound(100, 0.5, "graph_factorial")
    assert abs(img - float(img_ref)) <= 1e-9 * abs(float(img_ref))
    assert abs(graph - float(graph_ref)) <= 1e-9 * abs(float(graph_ref))
    assert graph > 0 and graph - img > 300
    stirling = 100 * math.log(100) - 100 + 0.5 * math.log(2 * math.pi * 100) + 1 / 1200
    assert graph - img == pytest.approx(stirling - 2 * math.log(100), abs=1e-6)


def test_bound_curve_dichotomy():
    ks = range(10, 201)
    img = {p.k: p.log_orbit_bound for p in bound_curve(ks, 0.5, IMG)}
    graph = {p.k: p.log_orbit_bound for p in bound_curve(ks, 0.5, GRAPH)}
    assert img[200] < img[100] < img[50]
    assert graph[200] > graph[100]
    assert tail_is_monotone(list(img.values()), decreasing=True)
    assert tail_is_monotone(list(graph.values()), decreasing=False)


def test_bound_curve_single_point_and_additivity():
    (p,) = bound_curve([37], 0.4, GRAPH)
    assert p.log_orbit_bound == orbit_volume_bound(37, 0.4, GRAPH)
    assert p.log_orbit_bound == p.log_sym_count + p.log_ball_volume
    assert p.log_sym_count == pytest.approx(math.lgamma(38))
    assert p.log_ball_volume == pytest.approx(float(mp_log_ball(37, 0.4)), rel=1e-12)


def test_bound_curve_capped_column():
    pts = bound_curve([2, 200], 1.0, GRAPH)
    assert pts[0].log_orbit_bound > 0 and pts[0].log_orbit_bound_capped == 0.0
    assert all(p.log_orbit_bound_capped <= 0.0 for p in pts)


def test_bound_curve_rejects_bad_ranges():
    with pytest.raises(RejectedInputError):
        bound_curve([], 0.5, IMG)
    with pytest.raises(RejectedInputError):
        bound_curve([5, 4], 0.5, IMG)


def test_feature_preimage_factor():
    assert feature_preimage_factor(12, 3) == 4.0
    assert feature_preimage_factor(7, 7) == 1.0
    with pytest.raises(RejectedInputError):
        feature_preimage_factor(3, 4)


def test_adjusted_curve_still_decreasing():
    plain = bound_curve([50, 100, 200], 0.5, IMG)
    adjusted = bound_curve([50, 100, 200], 0.5, IMG, feature_dim=10)
    for p, q in zip(plain, adjusted):
        assert q.log_sym_count - p.log_sym_count == pytest.approx(math.log(q.k))
    vals = [q.log_orbit_bound for q in adjusted]
    assert vals[0] > vals[1] > vals[2]


def test_resolution_mitigation_curve():
    rows = resolution_mitigation_curve([4, 8, 16, 32], 3, 0.1)
    assert [k for _, _, p in rows for k in [p.k]] == [48, 192, 768, 3072]
    vals = [p.log_orbit_bound for _, _, p in rows]
    assert all(b < a for a, b in zip(vals[1:], vals[2:]))
    assert len(resolution_mitigation_curve([16], 1, 0.1)) == 1
    one = resolution_mitigation_curve([8, 16], 1, 0.1)
    three = resolution_mitigation_curve([8, 16], 3, 0.1)
    for (_, _, a), (_, _, b) in zip(one, three):
        assert b.log_orbit_bound < a.log_orbit_bound
