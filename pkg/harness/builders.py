# harness/builders.py
"""
Space builders.

Every builder returns a generated MetricMeasureSpace carrying its recipe
{"builder": name, "params": {...}}, so a space can be serialized by recipe
and rebuilt bit for bit.
"""

import logging
from typing import Any, Callable, Dict, Mapping

import numpy as np

from mmspace.errors import ConfigError
from mmspace.space import MetricMeasureSpace

logger = logging.getLogger("heatperim")

# 2^-i underflows to zero past this many points
_GEOMETRIC_LIMIT = 1000


def _positive_int(params: Mapping[str, Any], key: str, builder: str, minimum: int = 1) -> int:
    if key not in params:
        raise ConfigError(f"{builder}: missing parameter {key!r}")
    value = params[key]
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or int(value) < minimum:
        raise ConfigError(f"{builder}: {key} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def _recipe(builder: str, **params: Any) -> Dict[str, Any]:
    return {"builder": builder, "params": dict(params)}


# -------------------------------------------------------
# ONE-DIMENSIONAL SPACES
# -------------------------------------------------------
def circle(n: int) -> MetricMeasureSpace:
    """Unit-circumference circle, points i/n, uniform mu = 1/n."""
    n = _positive_int({"n": n}, "n", "circle", minimum=2)
    points = np.arange(n, dtype=float) / n
    return MetricMeasureSpace(
        np.full(n, 1.0 / n), points=points, boxsize=1.0,
        label=f"circle({n})", recipe=_recipe("circle", n=n), dim=1,
    )


def interval(n: int) -> MetricMeasureSpace:
    """Unit interval, cell midpoints (i + 1/2)/n, uniform mu = 1/n."""
    n = _positive_int({"n": n}, "n", "interval", minimum=2)
    points = (np.arange(n, dtype=float) + 0.5) / n
    return MetricMeasureSpace(
        np.full(n, 1.0 / n), points=points,
        label=f"interval({n})", recipe=_recipe("interval", n=n), dim=1,
    )


_DENSITIES: Dict[str, Callable[[np.ndarray, int], np.ndarray]] = {
    "geometric": lambda i, n: 2.0 ** (-i),
    "uniform": lambda i, n: np.full(i.size, 1.0 / n),
    "linear": lambda i, n: (i + 1.0) / (n * (n + 1) / 2.0),
    "exponential": lambda i, n: np.exp(-i / n),
}


def weighted_line(n: int, density: str = "geometric") -> MetricMeasureSpace:
    """
    Points i/n on [0, 1) with a non-uniform measure.

    density names a weight law: "geometric" (2^-i), "uniform", "linear"
    (proportional to i + 1), "exponential" (e^{-i/n}).
    """
    n = _positive_int({"n": n}, "n", "weightedLine", minimum=2)
    if density not in _DENSITIES:
        raise ConfigError(f"weightedLine: unknown density {density!r}, choose from {sorted(_DENSITIES)}")
    if density == "geometric" and n > _GEOMETRIC_LIMIT:
        raise ConfigError(f"weightedLine: geometric density underflows beyond n={_GEOMETRIC_LIMIT}")
    idx = np.arange(n, dtype=float)
    mu = _DENSITIES[density](idx, n)
    return MetricMeasureSpace(
        mu, points=idx / n,
        label=f"weightedLine({n},{density})", recipe=_recipe("weightedLine", n=n, density=density), dim=1,
    )


# -------------------------------------------------------
# TWO-DIMENSIONAL AND SCATTERED SPACES
# -------------------------------------------------------
def _torus_points(n: int) -> np.ndarray:
    # row-major: index = i * n + j with x = i/n, y = j/n
    grid = np.arange(n, dtype=float) / n
    xs, ys = np.meshgrid(grid, grid, indexing="ij")
    return np.column_stack([xs.ravel(), ys.ravel()])


def torus2d(n: int) -> MetricMeasureSpace:
    """n x n periodic lattice on the unit torus, l2 torus metric, mu = 1/n^2."""
    n = _positive_int({"n": n}, "n", "torus2d", minimum=2)
    return MetricMeasureSpace(
        np.full(n * n, 1.0 / (n * n)), points=_torus_points(n), boxsize=1.0,
        label=f"torus2d({n})", recipe=_recipe("torus2d", n=n), dim=2,
    )


def point_cloud(n: int, dim: int = 2, seed: int = 0) -> MetricMeasureSpace:
    """n uniform random points in the unit cube [0, 1)^dim, mu = 1/n."""
    n = _positive_int({"n": n}, "n", "pointCloud", minimum=2)
    dim = _positive_int({"dim": dim}, "dim", "pointCloud")
    seed = _positive_int({"seed": seed}, "seed", "pointCloud", minimum=0)
    rng = np.random.default_rng(seed)
    points = rng.random((n, dim))
    return MetricMeasureSpace(
        np.full(n, 1.0 / n), points=points,
        label=f"pointCloud({n},{dim},{seed})", recipe=_recipe("pointCloud", n=n, dim=dim, seed=seed), dim=dim,
    )


def shrinking_balls_lattice(n: int, k: int) -> MetricMeasureSpace:
    """
    The n x n torus lattice that hosts the shrinking-balls union with 4^k
    centres. The set itself comes from harness.sets.shrinking_balls_union.
    """
    n = _positive_int({"n": n}, "n", "shrinkingBallsUnion", minimum=2)
    k = _positive_int({"k": k}, "k", "shrinkingBallsUnion")
    return MetricMeasureSpace(
        np.full(n * n, 1.0 / (n * n)), points=_torus_points(n), boxsize=1.0,
        label=f"shrinkingBallsUnion({n},{k})", recipe=_recipe("shrinkingBallsUnion", n=n, k=k), dim=2,
    )


BUILDERS: Dict[str, Callable[..., MetricMeasureSpace]] = {
    "circle": circle,
    "interval": interval,
    "torus2d": torus2d,
    "weightedLine": weighted_line,
    "pointCloud": point_cloud,
    "shrinkingBallsUnion": shrinking_balls_lattice,
}


def build_space(builder: str, params: Mapping[str, Any]) -> MetricMeasureSpace:
    """
    Build a space by builder name.

    Raises:
        ConfigError: unknown builder or invalid parameters
    """
    if builder not in BUILDERS:
        raise ConfigError(f"unknown space builder {builder!r}, choose from {sorted(BUILDERS)}")
    try:
        space = BUILDERS[builder](**dict(params))
    except TypeError as exc:
        raise ConfigError(f"{builder}: invalid parameters {dict(params)}: {exc}") from exc
    logger.info(f"[BUILD] {space.label}: n={space.n}, resolution={space.resolution:.4g}")
    return space
