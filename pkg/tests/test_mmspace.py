# tests/test_mmspace.py
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_array_equal

from harness.builders import circle, interval, torus2d, weighted_line
from harness.sets import arc, coordinate, sine, square
from mmspace.covering import EpsilonNet, epsilon_net, partition_of_unity
from mmspace.diagnostics import (
    PoincareProbes,
    doubling_estimate,
    poincare_estimate,
    random_balls,
)
from mmspace.errors import ConfigError, NumericalError
from mmspace.geometry import (
    lattice_ladder,
    minkowski_content,
    sigma_gamma_boundary,
    time_ladder_from_sqrt,
    tubular_neighborhood,
    vertex_boundary,
)
from mmspace.serialization import deserialize_space, serialize_space, space_to_dict, space_from_dict
from mmspace.space import MetricMeasureSpace, ball, ball_measure, closed_ball, indicator
from smoothing.smoothing import local_lip


def _dense_from_points(pts):
    pts = np.asarray(pts, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


# -------------------------------------------------------
# SPACES AND BALLS
# -------------------------------------------------------
def test_ball_on_small_circle(circle8):
    assert_array_equal(ball(circle8, 0, 0.2), [0, 1, 7])
    assert ball_measure(circle8, 0, 0.2) == pytest.approx(3 / 8)


def test_ball_always_contains_centre(circle8):
    assert_array_equal(ball(circle8, 3, 1e-6), [3])
    assert ball(circle8, 3, 10.0).size == 8


def test_closed_ball_includes_sphere(circle8):
    assert_array_equal(closed_ball(circle8, 0, 0.125), [0, 1, 7])
    assert_array_equal(ball(circle8, 0, 0.125), [0])


def test_ball_measure_on_weighted_line():
    space = weighted_line(8, "geometric")
    assert ball_measure(space, 0, 1.5 / 8) == pytest.approx(1.5)


def test_ball_rejects_bad_radius_and_index(circle8):
    with pytest.raises(ValueError):
        ball(circle8, 0, 0.0)
    with pytest.raises(IndexError):
        circle8.distances_from(8)


def test_resolution_and_diameter(circle8):
    assert circle8.resolution == pytest.approx(1 / 8)
    assert circle8.diameter == pytest.approx(0.5)
    assert circle8.total_measure == pytest.approx(1.0)


def test_indicator(circle8):
    assert_array_equal(indicator(circle8, np.array([1, 2])), [0, 1, 1, 0, 0, 0, 0, 0])


@pytest.mark.parametrize(
    "mu, dist",
    [
        ([1.0, 0.0], [[0, 1], [1, 0]]),
        ([1.0, 1.0], [[0, 1], [2, 0]]),
        ([1.0, 1.0], [[0.5, 1], [1, 0]]),
        ([1.0, 1.0, 1.0], [[0, 1, 5], [1, 0, 1], [5, 1, 0]]),
        ([1.0, 1.0], [[0, 1, 1], [1, 0, 1], [1, 1, 0]]),
    ],
)
def test_invalid_spaces_are_rejected(mu, dist):
    with pytest.raises(ConfigError):
        MetricMeasureSpace(mu, dist=dist)


def test_exactly_one_backend_required():
    with pytest.raises(ConfigError):
        MetricMeasureSpace([1.0])
    with pytest.raises(ConfigError):
        MetricMeasureSpace([1.0], dist=[[0.0]], points=[[0.0]])


def test_dense_and_generated_backends_agree():
    space = circle(16)
    dense = MetricMeasureSpace(space.mu, dist=space.dist)
    for x in (0, 5, 11):
        assert_array_equal(ball(space, x, 0.2), ball(dense, x, 0.2))
        np.testing.assert_allclose(space.distances_from(x), dense.distances_from(x), atol=1e-15)


@settings(max_examples=25, deadline=None)
@given(
    pts=arrays(np.float64, (12, 2), elements=st.floats(0, 1, allow_nan=False)),
    r1=st.floats(0.01, 1.0),
    r2=st.floats(0.01, 1.0),
)
def test_balls_are_monotone_in_radius(pts, r1, r2):
    space = MetricMeasureSpace(np.ones(12), dist=_dense_from_points(pts))
    lo, hi = sorted((r1, r2))
    for x in range(space.n):
        small = set(ball(space, x, lo).tolist())
        large = set(ball(space, x, hi).tolist())
        assert x in small
        assert small <= large


# -------------------------------------------------------
# LADDERS, TUBES AND BOUNDARIES
# -------------------------------------------------------
def test_lattice_ladder_is_snapped_and_decreasing():
    h = 1 / 1024
    radii = lattice_ladder(8 * h, 0.25, 10, h)
    assert np.all(np.diff(radii) < 0)
    m = radii / h - 0.5
    np.testing.assert_allclose(m, np.round(m), atol=1e-9)


def test_lattice_ladder_rejects_bad_bounds():
    with pytest.raises(ConfigError):
        lattice_ladder(0.5, 0.1, 4, 0.01)


def test_time_ladder_from_sqrt():
    t = time_ladder_from_sqrt(0.01, 0.1, 5)
    np.testing.assert_allclose(np.sqrt(t[[0, -1]]), [0.1, 0.01])
    assert np.all(np.diff(t) < 0)


def test_tubular_neighborhood_is_union_of_balls(circle8):
    assert_array_equal(tubular_neighborhood(circle8, [0], 0.2), [0, 1, 7])
    assert tubular_neighborhood(circle8, [], 0.2).size == 0

    space = circle(64)
    subset = [3, 20, 41]
    expected = sorted(set().union(*(ball(space, x, 0.05).tolist() for x in subset)))
    assert_array_equal(tubular_neighborhood(space, subset, 0.05), expected)


def test_vertex_boundary_of_half_circle(circle2048, half_arc2048):
    assert_array_equal(vertex_boundary(circle2048, half_arc2048), [0, 1023, 1024, 2047])


def test_minkowski_content_of_two_point_boundary(circle2048, half_arc2048):
    h = circle2048.resolution
    boundary = vertex_boundary(circle2048, half_arc2048)
    radii = lattice_ladder(8 * h, 0.05, 8, h)
    ladder = minkowski_content(circle2048, boundary, radii)
    np.testing.assert_allclose(ladder.values, 4 + 2 * h / radii, rtol=1e-9)
    assert ladder.limit_est == pytest.approx(4.0, rel=0.1)


def test_minkowski_content_of_empty_boundary_is_zero(circle2048):
    ladder = minkowski_content(circle2048, [], [0.05, 0.02])
    assert_array_equal(ladder.values, [0.0, 0.0])


def test_minkowski_content_rejects_subresolution_radius(circle2048):
    with pytest.raises(ConfigError):
        minkowski_content(circle2048, [0], [0.01, 1e-5])


def test_minkowski_content_of_square_on_torus():
    space = torus2d(128)
    boundary = vertex_boundary(space, square(space))
    ladder = minkowski_content(space, boundary, [0.1, 0.07, 0.05, 0.035])
    assert 2.0 <= ladder.limit_est <= 8.0


def test_sigma_gamma_boundary_of_half_circle():
    space = circle(1024)
    h = space.resolution
    boundary = sigma_gamma_boundary(space, arc(space, 0.0, 0.5), 0.25, [4.5 * h, 2.5 * h])
    assert_array_equal(boundary, [0, 1, 510, 511, 512, 513, 1022, 1023])


def test_sigma_gamma_boundary_of_whole_space_is_empty(circle256):
    h = circle256.resolution
    assert sigma_gamma_boundary(circle256, np.arange(256), 0.25, [4.5 * h, 2.5 * h]).size == 0


def test_sigma_gamma_boundary_of_alternating_set_is_everything(circle256):
    h = circle256.resolution
    assert sigma_gamma_boundary(circle256, np.arange(0, 256, 2), 0.25, [1.5 * h]).size == 256


def test_sigma_gamma_rejects_bad_gamma(circle256):
    with pytest.raises(ValueError):
        sigma_gamma_boundary(circle256, [0], 0.75, [0.1])


# -------------------------------------------------------
# NETS AND PARTITIONS OF UNITY
# -------------------------------------------------------
def test_epsilon_net_on_circle(circle1024):
    net = epsilon_net(circle1024, 0.1)
    assert 10 <= net.size <= 21
    dist = np.vstack([circle1024.distances_from(int(c)) for c in net.centers])
    assert np.all(dist.min(axis=0) < net.eps)
    off = dist[:, net.centers][~np.eye(net.size, dtype=bool)]
    assert np.all(off >= net.eps / 2)
    assert net.overlap >= 1
    assert not net.degenerate


def test_epsilon_net_coarser_than_diameter(circle1024):
    net = epsilon_net(circle1024, 2.0)
    assert_array_equal(net.centers, [0])


def test_epsilon_net_of_two_clusters():
    pts = np.array([[0.0], [0.01], [0.02], [5.0], [5.01]])
    space = MetricMeasureSpace(np.ones(5), dist=_dense_from_points(pts))
    assert_array_equal(epsilon_net(space, 1.0).centers, [0, 3])


def test_epsilon_net_below_spacing_is_degenerate(circle256):
    net = epsilon_net(circle256, circle256.resolution / 2)
    assert net.degenerate
    assert net.size == 256


def test_epsilon_net_rejects_nonpositive_eps(circle256):
    with pytest.raises(ValueError):
        epsilon_net(circle256, 0.0)


def test_partition_of_unity_properties(circle1024):
    net = epsilon_net(circle1024, 0.1)
    pou = partition_of_unity(circle1024, net)
    phi = pou.phi.toarray()
    np.testing.assert_allclose(phi.sum(axis=0), 1.0, atol=1e-12)
    for i, c in enumerate(net.centers):
        support = np.flatnonzero(phi[i] > 0)
        assert np.all(circle1024.distances_from(int(c))[support] < 2 * net.eps)
    assert pou.lip_constant <= 4.0


def test_single_centre_partition_is_constant(circle256):
    pou = partition_of_unity(circle256, epsilon_net(circle256, 2.0))
    np.testing.assert_allclose(pou.phi.toarray(), 1.0)


def test_partition_of_unity_reports_uncovered_points(circle256):
    net = EpsilonNet(eps=0.01, centers=np.array([0]), overlap=1)
    with pytest.raises(NumericalError, match="not covered"):
        partition_of_unity(circle256, net)


# -------------------------------------------------------
# DOUBLING AND POINCARE
# -------------------------------------------------------
def test_doubling_on_circle(circle1024):
    probes = random_balls(circle1024, 64, 8 * circle1024.resolution, 0.25, seed=1)
    report = doubling_estimate(circle1024, probes, seed=1)
    assert 1.9 <= report.cD <= 2.1
    assert report.qMu == pytest.approx(np.log2(report.cD))
    assert len(report.radii_sampled) == 64


def test_doubling_is_resolution_stable():
    coarse, fine = circle(512), circle(2048)
    probes = random_balls(coarse, 64, 8 / 512, 0.25, seed=7)
    a = doubling_estimate(coarse, probes).cD
    b = doubling_estimate(fine, [(4 * x, r) for x, r in probes]).cD
    assert abs(a - b) < 0.1


def test_doubling_on_torus(torus64):
    probes = random_balls(torus64, 32, 0.1, 0.2, seed=2)
    assert doubling_estimate(torus64, probes).cD == pytest.approx(4.0, rel=0.15)


def test_doubling_of_single_point():
    space = MetricMeasureSpace([2.0], dist=[[0.0]])
    assert doubling_estimate(space, [(0, 1.0)]).cD == 1.0


def test_doubling_needs_probes(circle8):
    with pytest.raises(ValueError):
        doubling_estimate(circle8, [])


def test_poincare_on_circle(circle1024):
    h = circle1024.resolution
    probes = PoincareProbes(
        functions=[sine(circle1024), sine(circle1024, freq=3)],
        balls=random_balls(circle1024, 32, 8 * h, 0.25, seed=3),
    )
    report = poincare_estimate(circle1024, lambda u: local_lip(circle1024, u, h), 1.0, probes)
    assert 0 < report.cP <= 1.2
    assert report.admissible > 0


def test_poincare_for_linear_function_on_interval(interval512):
    h = interval512.resolution
    probes = PoincareProbes(
        functions=[coordinate(interval512)],
        balls=random_balls(interval512, 16, 8 * h, 0.25, seed=4),
    )
    report = poincare_estimate(interval512, lambda u: local_lip(interval512, u, h), 1.0, probes)
    assert report.cP <= 1.0 + 1e-9


def test_poincare_with_constant_probes_has_no_admissible_ratio(circle256):
    probes = PoincareProbes(functions=[np.ones(256)], balls=[(0, 0.1), (10, 0.2)])
    with pytest.raises(NumericalError):
        poincare_estimate(circle256, lambda u: local_lip(circle256, u, circle256.resolution), 1.0, probes)


def test_poincare_with_flat_oscillation_has_no_positive_constant(circle256):
    sample = PoincareProbes(functions=[np.ones(256)], balls=[(0, 0.1), (10, 0.2)])
    with pytest.raises(NumericalError, match="zero oscillation"):
        poincare_estimate(circle256, lambda u: np.ones_like(u), 1.0, sample)


def test_poincare_rejects_contracting_dilation(circle256):
    probes = PoincareProbes(functions=[sine(circle256)], balls=[(0, 0.1)])
    with pytest.raises(ValueError):
        poincare_estimate(circle256, lambda u: u, 0.5, probes)


# -------------------------------------------------------
# SERIALIZATION
# -------------------------------------------------------
def test_generated_space_round_trip_is_byte_identical():
    space = circle(64)
    text = serialize_space(space)
    again = deserialize_space(text)
    assert serialize_space(again) == text
    assert_array_equal(again.mu, space.mu)
    assert json.loads(text)["dist"] == {"kind": "generated", "builder": "circle", "params": {"n": 64}}


def test_dense_space_round_trip_is_byte_identical():
    pts = np.array([[0.0, 0.0], [0.3, 0.1], [0.7, 0.9], [0.2, 0.5]])
    space = MetricMeasureSpace([0.1, 0.2, 0.3, 0.4], dist=_dense_from_points(pts), label="four")
    text = serialize_space(space)
    again = deserialize_space(text)
    assert serialize_space(again) == text
    assert again.label == "four"
    np.testing.assert_allclose(again.dist, space.dist, atol=0)


def test_rebuilt_space_must_match_stored_measure():
    doc = space_to_dict(circle(8))
    doc["mu"] = [0.2] * 8
    with pytest.raises(ConfigError):
        space_from_dict(doc)


def test_malformed_space_document():
    with pytest.raises(ConfigError):
        deserialize_space('{"n": 2}')
