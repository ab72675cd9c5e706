# tests/test_bv.py
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from bv.variation import (
    bv_report,
    coarea_check,
    edge_tv,
    gamma_tv,
    isoperimetric_check,
    level_perimeters,
    perimeter,
    tv_flavor_constant,
)
from generator.generator import build_generator
from harness.builders import torus2d
from harness.sets import arc, half, sine
from mmspace.diagnostics import random_balls
from mmspace.errors import NumericalError
from mmspace.space import ball, indicator


def test_edge_tv_of_arc_indicator(gen256):
    space = gen256.space
    assert edge_tv(gen256, indicator(space, arc(space))) == pytest.approx(2.0, rel=1e-12)


def test_gamma_tv_of_arc_indicator(gen256):
    space = gen256.space
    assert gamma_tv(gen256, indicator(space, arc(space))) == pytest.approx(2 * np.sqrt(2), rel=1e-12)


def test_total_variation_of_sine(gen256):
    u = sine(gen256.space)
    assert edge_tv(gen256, u) == pytest.approx(4.0, rel=1e-3)
    assert gamma_tv(gen256, u) == pytest.approx(4.0, rel=1e-2)


def test_perimeter_is_local(gen256):
    space = gen256.space
    E = arc(space)
    assert perimeter(gen256, E) == pytest.approx(2.0)
    assert perimeter(gen256, E, region=ball(space, 0, 0.1)) == pytest.approx(1.0)
    assert perimeter(gen256, E, region=ball(space, 64, 0.1)) == 0.0


def test_perimeter_of_empty_and_full_sets(gen256):
    assert perimeter(gen256, []) == 0.0
    assert perimeter(gen256, np.arange(256)) == 0.0


def test_bv_report_with_levels(gen256):
    space = gen256.space
    u = 2 * indicator(space, arc(space, 0.0, 0.5)) + indicator(space, arc(space, 0.0, 0.25))
    report = bv_report(gen256, u, with_levels=True)
    assert report.tv_edge == pytest.approx(edge_tv(gen256, u))
    assert report.tv_gamma == pytest.approx(gamma_tv(gen256, u))
    assert [t for t, _ in report.levels] == [0.0, 2.0]
    assert report.levels == level_perimeters(gen256, u)
    assert bv_report(gen256, u).levels is None


@settings(max_examples=30, deadline=None)
@given(u=arrays(np.int64, 256, elements=st.integers(0, 5)))
def test_coarea_identity_is_exact(gen256, u):
    report = coarea_check(gen256, u.astype(float))
    assert report.residual <= 1e-9 * max(1.0, report.rhs)


def test_coarea_identity_on_the_torus():
    gen = build_generator(torus2d(100))
    rng = np.random.default_rng(11)
    for _ in range(100):
        u = rng.integers(0, 6, gen.n).astype(float)
        report = coarea_check(gen, u)
        assert report.residual <= 1e-10 * max(1.0, report.rhs)


def test_coarea_with_extra_thresholds(gen256):
    u = sine(gen256.space)
    report = coarea_check(gen256, u, thresholds=np.linspace(-1, 1, 11))
    assert report.residual <= 1e-9 * report.rhs
    with pytest.raises(ValueError):
        coarea_check(gen256, u, thresholds=[0.0, 0.5])


def test_isoperimetric_ratio_on_circle(gen256):
    space = gen256.space
    balls = random_balls(space, 64, 4 * space.resolution, 0.2, seed=5)
    report = isoperimetric_check(gen256, arc(space), balls)
    assert report.retained > 0
    assert report.retained + report.skipped == 64
    assert 0 < report.worst <= 0.6


def _interface_balls(n):
    # centres on the column x = 0.5, radii in absolute units
    return [((n // 2) * n + j * (n // 8), r) for j in range(8) for r in (0.1, 0.15, 0.2)]


def test_isoperimetric_ratio_on_torus_is_stable_across_resolutions(torus64):
    worst = []
    for space in (torus64, torus2d(128)):
        n = int(round(np.sqrt(space.n)))
        balls = _interface_balls(n)
        report = isoperimetric_check(build_generator(space), half(space), balls)
        assert report.retained == len(balls)
        worst.append(report.worst)
    assert 0.1 < worst[0] < 0.4
    assert worst[1] == pytest.approx(worst[0], rel=0.2)


def test_isoperimetric_check_needs_a_cut(gen256):
    with pytest.raises(NumericalError):
        isoperimetric_check(gen256, np.arange(256), [(0, 0.1), (50, 0.2)])


def test_tv_flavor_constant(gen256):
    space = gen256.space
    jump = indicator(space, arc(space))
    assert tv_flavor_constant(gen256, [jump]) == pytest.approx(np.sqrt(2))
    assert tv_flavor_constant(gen256, [sine(space)]) == pytest.approx(1.0, rel=1e-2)
    assert tv_flavor_constant(gen256, [np.ones(256)]) == 1.0
