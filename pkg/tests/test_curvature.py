# tests/test_curvature.py
import json

import numpy as np
import pandas as pd
import pytest
from numpy.testing import assert_allclose

from curvature.bakry_emery import (
    be3_prefactor,
    de_giorgi_with_be,
    gamma_gradient_report,
    verify_be1,
    verify_be2,
    verify_be3,
    verify_self_improvement,
)
from curvature.export import export_curvature
from curvature.gamma2 import best_k, curvature_check, gamma2, local_best_k
from curvature.pazy import pazy_commutation_residual, pazy_convolution, pazy_kernel
from generator.generator import build_generator, carre_du_champ
from generator.heat import HeatOperator
from harness.builders import circle, point_cloud, weighted_line
from harness.sets import arc, sine
from mmspace.geometry import time_ladder_from_sqrt
from mmspace.space import MetricMeasureSpace, indicator


@pytest.fixture(scope="module")
def two_point_gen():
    return build_generator(MetricMeasureSpace([1.0, 1.0], dist=[[0.0, 1.0], [1.0, 0.0]]))


@pytest.fixture(scope="module")
def circle_curvature(gen256):
    return best_k(gen256)


@pytest.fixture(scope="module")
def cloud_heat():
    gen = build_generator(point_cloud(200, seed=0), h=0.2)
    return HeatOperator(gen, strategy="spectral")


# -------------------------------------------------------
# BEST CONSTANTS
# -------------------------------------------------------
def test_circle_is_flat(gen256, circle_curvature):
    scale = 1 / gen256.space.resolution ** 2
    assert abs(circle_curvature.global_k) <= 1e-6 * scale
    assert_allclose(circle_curvature.per_vertex_k, circle_curvature.global_k, atol=1e-6 * scale)


def test_two_point_space_has_curvature_twice_the_rate(two_point_gen):
    report = best_k(two_point_gen)
    assert report.global_k == pytest.approx(2 * 2.0, rel=1e-10)


def test_best_constant_scales_with_the_generator(two_point_gen):
    assert best_k(two_point_gen.scaled(3.0)).global_k == pytest.approx(12.0, rel=1e-10)


def test_best_k_needs_two_hops(gen256):
    with pytest.raises(ValueError):
        best_k(gen256, neighborhood_radius=1)


def test_local_witness_attains_the_constant(gen256):
    k, witness = local_best_k(gen256, 10)
    g = carre_du_champ(gen256, witness)[10]
    assert g > 0
    assert gamma2(gen256, witness)[10] == pytest.approx(k * g, abs=1e-6 * g * 65536)


def test_curvature_check_accepts_smooth_functions(gen256, circle_curvature):
    assert curvature_check(gen256, circle_curvature, sine(gen256.space)) is None


def test_curvature_report_serializes(circle_curvature):
    doc = circle_curvature.to_dict()
    assert doc["radius"] == 2
    assert doc["witnessVertex"] == circle_curvature.witness_vertex
    assert "Schur" in doc["method"]


# -------------------------------------------------------
# VERIFIERS
# -------------------------------------------------------
def _delta(n, x):
    phi = np.zeros(n)
    phi[x] = 1.0
    return phi


@pytest.mark.parametrize("fixture", ["two_point_gen", "gen256"])
def test_be1_is_sharp_at_the_witness(request, fixture):
    gen = request.getfixturevalue(fixture)
    report = best_k(gen)
    phi = _delta(gen.n, report.witness_vertex)
    assert verify_be1(gen, report.global_k, report.witness, phi).passed
    failing = verify_be1(gen, report.global_k + 0.1, report.witness, phi)
    assert failing.passed is False
    assert failing.violation > 0


def test_be1_rejects_negative_test_functions(gen256):
    with pytest.raises(ValueError):
        verify_be1(gen256, 0.0, sine(gen256.space), -np.ones(256))


def test_be2_and_be3_hold_on_the_circle(heat256):
    space = heat256.gen.space
    for f in (sine(space), indicator(space, arc(space))):
        for t in (1e-5, 1e-4):
            assert verify_be2(heat256, 0.0, f, t).passed
            assert verify_be3(heat256, 0.0, f, t).passed


@pytest.mark.parametrize(
    "space, h",
    [(circle(64), None), (weighted_line(32), None), (point_cloud(200, seed=0), 0.2)],
    ids=["circle", "weighted_line", "cloud"],
)
def test_be_chain_holds_just_below_the_best_constant(space, h):
    gen = build_generator(space, h=h)
    op = HeatOperator(gen, strategy="spectral")
    K = best_k(gen).global_k - 1e-6
    rate = float(np.max(-gen.A.diagonal()))
    rng = np.random.default_rng(3)
    for _ in range(100):
        f = rng.standard_normal(gen.n)
        t = 10 ** rng.uniform(-2, 1) / rate
        assert verify_be2(op, K, f, t).passed
        assert verify_be3(op, K, f, t).passed


def test_be2_fails_for_an_overstated_constant(heat256):
    result = verify_be2(heat256, 1e5, sine(heat256.gen.space), 1e-4)
    assert result.passed is False
    with pytest.raises(ValueError):
        verify_be2(heat256, 0.0, sine(heat256.gen.space), 0.0)


def test_be3_prefactor():
    assert be3_prefactor(0.0, 0.5) == 1.0
    assert be3_prefactor(2.0, 0.5) == pytest.approx((np.exp(2.0) - 1) / 2)
    assert be3_prefactor(-1.0, 1e-9) == pytest.approx(2e-9, rel=1e-6)


def test_self_improvement_on_the_circle(heat256):
    space = heat256.gen.space
    f = indicator(space, arc(space))
    plain = verify_self_improvement(heat256, 0.0, f, 1e-4)
    smoothed = verify_self_improvement(heat256, 0.0, f, 1e-4, delta=0.1)
    assert plain.passed and smoothed.passed
    assert np.all(smoothed.lhs <= plain.lhs + 1e-12)


def test_self_improvement_off_lattice_is_reported_only(cloud_heat):
    f = cloud_heat.gen.space.points[:, 0]
    result = verify_self_improvement(cloud_heat, 0.0, f, 1e-3)
    assert result.passed is None
    assert np.isfinite(result.violation)
    with pytest.raises(ValueError):
        verify_self_improvement(cloud_heat, 0.0, f, 1e-3, delta=-1.0)


def test_gamma_gradient_report(gen256):
    report = gamma_gradient_report(gen256, 0.0, sine(gen256.space), np.ones(256))
    assert report.lhs >= 0
    assert np.isfinite(report.rhs)
    assert report.integrated_lhs == pytest.approx(report.lhs)
    assert isinstance(report.holds, bool)


def test_de_giorgi_with_semigroup_bound_on_circle(heat2048, half_arc2048):
    h = heat2048.gen.space.resolution
    chi = indicator(heat2048.gen.space, half_arc2048)
    result = de_giorgi_with_be(heat2048, chi, 0.0, time_ladder_from_sqrt(8 * h, 28 * h, 8))
    assert result.judged
    assert result.passed is True
    assert result.jensen_bound == pytest.approx(2 * np.sqrt(2))
    assert result.ladder.limit_est == pytest.approx(2.0, rel=0.02)
    assert all(v <= b for v, b in zip(result.ladder.values, result.be_bound))


def test_de_giorgi_bound_off_lattice(cloud_heat):
    space = cloud_heat.gen.space
    u = (space.points[:, 0] < 0.5).astype(float)
    res = space.resolution
    result = de_giorgi_with_be(cloud_heat, u, 0.0, time_ladder_from_sqrt(8 * res, 16 * res, 5))
    assert result.passed is None
    assert any("not a lattice" in note for note in result.notes)


# -------------------------------------------------------
# PAZY CONVOLUTION
# -------------------------------------------------------
def test_pazy_kernel_is_a_probability():
    kernel = pazy_kernel(64)
    assert kernel.weights.sum() == pytest.approx(1.0)
    assert np.all(kernel.weights >= 0)
    assert np.all((kernel.nodes > 0) & (kernel.nodes < 1))
    with pytest.raises(ValueError):
        pazy_kernel(0)


def test_pazy_convolution_commutes_with_the_generator(heat256):
    f = indicator(heat256.gen.space, arc(heat256.gen.space))
    assert pazy_commutation_residual(heat256, f, 1e-4) <= 1e-10


def test_pazy_convolution_preserves_constants(heat256):
    assert_allclose(pazy_convolution(heat256, np.ones(256), 1e-4), 1.0, atol=1e-10)


def test_pazy_convolution_validation(heat256):
    with pytest.raises(ValueError):
        pazy_convolution(heat256, np.ones(256), 0.0)
    with pytest.raises(ValueError):
        pazy_convolution(heat256, np.ones(256), 1.0, max_time=0.5)


# -------------------------------------------------------
# EXPORT
# -------------------------------------------------------
def test_export_curvature(tmp_path, circle_curvature):
    csv_path, json_path = export_curvature(circle_curvature, str(tmp_path))
    frame = pd.read_csv(csv_path)
    assert list(frame.columns) == ["vertex", "k_local"]
    assert len(frame) == 256
    with open(json_path, encoding="utf-8") as fh:
        summary = json.load(fh)
    assert summary["globalK"] == pytest.approx(circle_curvature.global_k, abs=1e-12)
    assert summary["tolerances"] == {"verifier": 1e-8}
