# tests/test_functionals.py
import asyncio
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.integrate import quad
from scipy.special import erfc

from functionals.degiorgi import de_giorgi
from functionals.energies import (
    conductor_capacity,
    diagonal_strip,
    mazya_coarea_quantity,
    mazya_energy,
    near_diagonal_energy,
)
from functionals.ladder import (
    FINITE,
    NO_PLATEAU,
    OUT_OF_WINDOW,
    PlateauDetector,
    WindowPolicy,
    check_decreasing,
    ladder_scan,
    summarize_ladder,
)
from functionals.ledoux import l1_heat_identity, ledoux_energy_band, ledoux_global, ledoux_local
from functionals.parallel import ParallelLadderEngine
from generator.generator import build_generator
from generator.heat import HeatOperator
from harness.builders import circle, torus2d
from harness.sets import arc, disk, sine
from mmspace.errors import ConfigError
from mmspace.space import indicator

LEDOUX_KAPPA = quad(lambda s: 0.5 * erfc(s / 2), 0.0, 1.0)[0]


# -------------------------------------------------------
# LADDERS
# -------------------------------------------------------
def test_plateau_detector_finds_the_last_settled_run():
    detector = PlateauDetector(threshold=0.02, min_run=3)
    assert detector.detect([1.1, 1.05, 1.0, 1.0, 1.0]) == (2, 5)
    assert detector.detect([1.0, 2.0, 4.0, 8.0, 16.0]) is None
    assert detector.detect([1.0, 1.0, 1.0, 3.0, 3.0, 3.0]) == (3, 6)


def test_plateau_detector_ignores_nan_runs():
    assert PlateauDetector().detect([np.nan, np.nan, np.nan, np.nan]) is None


@pytest.mark.parametrize("params", [[], [0.1, 0.2], [0.1, 0.1], [0.2, -0.1], [0.2, np.inf]])
def test_check_decreasing_rejects(params):
    with pytest.raises(ConfigError):
        check_decreasing(params)


def test_window_policy_thresholds():
    assert WindowPolicy.length().threshold(0.01) == pytest.approx(0.08)
    assert WindowPolicy.time().threshold(0.01) == pytest.approx(1e-3)
    with pytest.raises(ConfigError):
        WindowPolicy("area", 1.0).threshold(0.01)


def test_summarize_ladder_verdicts():
    params = [0.4, 0.2, 0.1, 0.05]
    settled = summarize_ladder("f", "s", params, [1.0, 1.0, 1.0, 1.0], 0.05)
    assert settled.verdict == FINITE
    assert settled.limit_est == pytest.approx(1.0)

    diverging = summarize_ladder("f", "s", params, [1.0, 2.0, 4.0, 8.0], 0.05)
    assert diverging.verdict == NO_PLATEAU
    assert np.isnan(diverging.limit_est)
    assert diverging.window_min == 1.0

    outside = summarize_ladder("f", "s", params, [1.0, 1.0, 1.0, 1.0], 1.0)
    assert outside.verdict == OUT_OF_WINDOW
    assert not outside.in_window.any()

    minimum = summarize_ladder("f", "s", params, [3.0, 2.0, 2.5, 9.0], 0.1, estimator="min")
    assert minimum.limit_est == 2.0
    assert minimum.samples[-1].in_window is False


def test_ladder_scan_estimates_the_limit():
    params = np.geomspace(0.2, 0.01, 8)
    ladder = ladder_scan(lambda eps: 1.0 + eps ** 2, params, WindowPolicy.length(), 1e-3, name="toy")
    assert ladder.verdict == FINITE
    assert ladder.limit_est == pytest.approx(1.0, abs=2e-3)
    assert np.all(np.diff(ladder.params) < 0)
    assert ladder.to_dict()["limitEst"] == pytest.approx(ladder.limit_est)


def test_ladder_scan_needs_enough_trusted_samples():
    with pytest.raises(ConfigError, match="in-window"):
        ladder_scan(lambda eps: eps, [0.05, 0.02, 0.01], WindowPolicy.length(), 1e-3)


def test_ladder_scan_is_independent_of_worker_count():
    params = np.geomspace(0.5, 0.01, 12)
    fn = lambda eps: float(np.sin(1.0 / eps))  # noqa: E731
    serial = ladder_scan(fn, params, WindowPolicy.length(), 1e-3, workers=1)
    pooled = ladder_scan(fn, params, WindowPolicy.length(), 1e-3, workers=4)
    np.testing.assert_array_equal(serial.values, pooled.values)
    assert serial.verdict == pooled.verdict


def test_parallel_engine_keeps_order():
    engine = ParallelLadderEngine(workers=3)
    assert engine.run(lambda x: x * x, list(range(10))) == [x * x for x in range(10)]
    with pytest.raises(ValueError):
        ParallelLadderEngine(workers=0)


def test_parallel_engine_inside_a_running_loop():
    engine = ParallelLadderEngine(workers=3)

    async def caller():
        return engine.run(lambda x: x + 1, list(range(8)), tag="nested")

    assert asyncio.run(caller()) == list(range(1, 9))


# -------------------------------------------------------
# NEAR-DIAGONAL ENERGIES
# -------------------------------------------------------
@pytest.mark.parametrize("m", [8, 16, 64])
def test_near_diagonal_energy_of_arc_indicator(circle2048, half_arc2048, m):
    h = circle2048.resolution
    chi = indicator(circle2048, half_arc2048)
    value = near_diagonal_energy(circle2048, chi, (m + 0.5) * h)
    assert value == pytest.approx(1 - 1 / (2 * m + 1) ** 2, rel=1e-10)


def test_near_diagonal_energy_of_sine(circle2048):
    h = circle2048.resolution
    value = near_diagonal_energy(circle2048, sine(circle2048), 32.5 * h)
    assert value == pytest.approx(2.0, rel=0.01)


def test_empty_strip_gives_zero(circle2048):
    strip = diagonal_strip(circle2048, 0.25 * circle2048.resolution)
    assert not strip.in_window
    assert near_diagonal_energy(circle2048, sine(circle2048), 0.25 * circle2048.resolution) == 0.0


def test_mazya_energy_is_the_shifted_strip_energy(circle256):
    u = sine(circle256)
    eps = 4.5 * circle256.resolution
    assert mazya_energy(circle256, u, 1 + eps) == pytest.approx(near_diagonal_energy(circle256, u, eps), rel=1e-12)
    with pytest.raises(ValueError):
        mazya_energy(circle256, u, 1.0)


@settings(max_examples=25, deadline=None)
@given(u=arrays(np.int64, 256, elements=st.integers(0, 4)))
def test_mazya_coarea_ratio_is_one_half(circle256, u):
    u = u.astype(float)
    report = mazya_coarea_quantity(circle256, u, 3.5 * circle256.resolution)
    if report.energy > 0:
        assert report.ratio == pytest.approx(0.5, rel=1e-10)
    else:
        assert report.value == 0.0


def test_mazya_coarea_needs_nonnegative_input(circle256):
    with pytest.raises(ValueError):
        mazya_coarea_quantity(circle256, sine(circle256), 0.05)


def _brute_force_capacity(space, u, a, t):
    strip = diagonal_strip(space, a - 1.0)
    upper = strip.I < strip.J
    I, J = strip.I[upper], strip.J[upper]
    w = 2.0 * strip.weight[upper] / (a - 1.0)
    inner = u > a * t
    free = np.flatnonzero((u > t) & ~inner)
    assert free.size <= 16
    best = np.inf
    for bits in itertools.product([False, True], repeat=free.size):
        side = inner.copy()
        side[free] = bits
        best = min(best, float(w[side[I] != side[J]].sum()))
    return best


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_conductor_capacity_matches_brute_force(seed):
    space = circle(16)
    rng = np.random.default_rng(seed)
    u = rng.uniform(0.6, 1.6, 16)
    u[0], u[8] = 2.0, 0.1
    a, t = 1.0 + 2.5 / 16, 1.0
    assert conductor_capacity(space, u, a, t) == pytest.approx(_brute_force_capacity(space, u, a, t), rel=1e-9)


def test_conductor_capacity_with_a_wide_free_band():
    space = circle(16)
    u = np.array([2.0] * 4 + [1.1] * 6 + [0.5] * 6)
    a, t = 1.0 + 2.5 / 16, 1.0
    assert conductor_capacity(space, u, a, t) == pytest.approx(_brute_force_capacity(space, u, a, t), rel=1e-9)


@pytest.mark.parametrize(
    "u, a, t",
    [
        (np.linspace(0, 1, 16), 1.0, 0.5),
        (np.linspace(0, 1, 16), 1.2, 0.0),
        (np.linspace(0, 1, 16), 1.2, 0.9),
        (np.linspace(1, 2, 16), 1.2, 0.5),
    ],
)
def test_conductor_capacity_rejects_degenerate_condensers(u, a, t):
    with pytest.raises(ValueError):
        conductor_capacity(circle(16), u, a, t)


# -------------------------------------------------------
# LEDOUX FUNCTIONALS
# -------------------------------------------------------
def test_ledoux_constant():
    assert LEDOUX_KAPPA == pytest.approx(0.5 * erfc(0.5) + (1 - np.exp(-0.25)) / np.sqrt(np.pi), rel=1e-12)
    assert 2 * LEDOUX_KAPPA == pytest.approx(0.729097, abs=1e-5)


@pytest.mark.parametrize("m", [16, 32])
def test_ledoux_global_counts_boundary_points(heat2048, half_arc2048, m):
    t = ((m + 1e-3) * heat2048.gen.space.resolution) ** 2
    assert ledoux_global(heat2048, half_arc2048, t) == pytest.approx(2.0, rel=0.03)


@pytest.mark.parametrize("m", [16, 32])
def test_ledoux_local_on_circle(heat2048, half_arc2048, m):
    t = ((m + 1e-3) * heat2048.gen.space.resolution) ** 2
    assert ledoux_local(heat2048, half_arc2048, t) == pytest.approx(2 * LEDOUX_KAPPA, rel=0.05)


def test_ledoux_local_of_trivial_sets(heat256):
    assert ledoux_local(heat256, [], 1e-3) == 0.0
    assert ledoux_local(heat256, np.arange(256), 1e-3) == 0.0
    with pytest.raises(ValueError):
        ledoux_local(heat256, [0], 0.0)


def test_l1_heat_identity(heat2048, half_arc2048):
    report = l1_heat_identity(heat2048, half_arc2048, 1e-4)
    assert report.residual <= 1e-10
    assert report.lhs > 0


def test_ledoux_energy_band(heat2048, half_arc2048):
    h = heat2048.gen.space.resolution
    lo, hi = ledoux_energy_band(heat2048, half_arc2048, [((m + 0.5) * h) ** 2 for m in (16, 24, 32)])
    assert 0.6 < lo <= hi < 0.9


def test_ledoux_energy_band_is_stable_across_resolutions(circle1024, heat2048, half_arc2048):
    coarse = HeatOperator(build_generator(circle1024), strategy="spectral")
    bands = []
    for op, subset in ((coarse, arc(circle1024, 0.0, 0.5)), (heat2048, half_arc2048)):
        h = op.gen.space.resolution
        bands.append(ledoux_energy_band(op, subset, [((m + 0.5) * h) ** 2 for m in (16, 24, 32)]))
    ratios = [r for band in bands for r in band]
    assert min(ratios) > 0
    assert max(ratios) <= 2 * min(ratios)


# -------------------------------------------------------
# DE GIORGI
# -------------------------------------------------------
@pytest.mark.parametrize("m", [16, 28])
def test_de_giorgi_of_half_circle(heat2048, half_arc2048, m):
    t = (m * heat2048.gen.space.resolution) ** 2
    chi = indicator(heat2048.gen.space, half_arc2048)
    assert de_giorgi(heat2048, chi, t) == pytest.approx(2.0, rel=0.02)


@pytest.mark.parametrize("t", [1e-4, 2e-4])
def test_de_giorgi_of_sine(heat2048, t):
    value = de_giorgi(heat2048, sine(heat2048.gen.space), t)
    assert value == pytest.approx(4 * np.exp(-4 * np.pi ** 2 * t), rel=1e-3)


def test_de_giorgi_needs_positive_time(heat256):
    with pytest.raises(ValueError):
        de_giorgi(heat256, np.ones(256), 0.0)


def test_de_giorgi_of_disk_on_torus():
    space = torus2d(128)
    op = HeatOperator(build_generator(space), strategy="krylov")
    chi = indicator(space, disk(space, radius=0.25))
    assert de_giorgi(op, chi, 1e-3) == pytest.approx(np.pi / 2, rel=0.05)


def test_near_diagonal_energy_increases_towards_the_limit(circle2048):
    h = circle2048.resolution
    chi = indicator(circle2048, arc(circle2048, 0.0, 0.5))
    narrow = near_diagonal_energy(circle2048, chi, 8.5 * h)
    wide = near_diagonal_energy(circle2048, chi, 64.5 * h)
    assert narrow < wide < 1.0
