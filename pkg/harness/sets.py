# harness/sets.py
"""
Set and function builders used as experiment inputs.

Sets are sorted index arrays, functions are length-n float vectors. Both are
looked up by name from experiment configs.
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, Mapping, Optional, Sequence

import numpy as np
from scipy.stats import qmc

from mmspace.errors import ConfigError
from mmspace.space import MetricMeasureSpace, indicator as indicator_vector

logger = logging.getLogger("heatperim")


def _coords(space: MetricMeasureSpace) -> np.ndarray:
    if space.points is None:
        raise ConfigError(f"{space.label or 'space'} has no coordinates; use an explicit subset")
    return space.points


def _axis(space: MetricMeasureSpace, axis: int) -> np.ndarray:
    pts = _coords(space)
    if not 0 <= axis < pts.shape[1]:
        raise ConfigError(f"axis {axis} out of range for a {pts.shape[1]}-dimensional space")
    return pts[:, axis]


def _gap_to(space: MetricMeasureSpace, center: Sequence[float]) -> np.ndarray:
    pts = _coords(space)
    center = np.broadcast_to(np.asarray(center, dtype=float), (pts.shape[1],))
    gap = np.abs(pts - center)
    if space.boxsize is not None:
        gap = np.minimum(gap, space.boxsize - gap)
    return np.sqrt((gap ** 2).sum(axis=1))


# -------------------------------------------------------
# SETS
# -------------------------------------------------------
def arc(space: MetricMeasureSpace, start: float = 0.0, length: float = 0.5) -> np.ndarray:
    """Points with (x - start) mod 1 < length on a one-dimensional space."""
    if not 0 < length <= 1:
        raise ConfigError(f"arc length must lie in (0, 1], got {length}")
    x = _axis(space, 0)
    return np.flatnonzero(np.mod(x - start, 1.0) < length)


def half(space: MetricMeasureSpace, axis: int = 0) -> np.ndarray:
    return np.flatnonzero(_axis(space, axis) < 0.5)


def disk(space: MetricMeasureSpace, center: Optional[Sequence[float]] = None, radius: float = 0.25) -> np.ndarray:
    """Open disk, periodic distances on periodic spaces. Centre defaults to the middle of the box."""
    if radius <= 0:
        raise ConfigError(f"disk radius must be positive, got {radius}")
    center = 0.5 if center is None else center
    return np.flatnonzero(_gap_to(space, center) < radius)


def square(space: MetricMeasureSpace, corner: Optional[Sequence[float]] = None, side: float = 0.5) -> np.ndarray:
    if side <= 0:
        raise ConfigError(f"square side must be positive, got {side}")
    pts = _coords(space)
    corner = np.broadcast_to(np.asarray(0.25 if corner is None else corner, dtype=float), (pts.shape[1],))
    inside = np.all((pts >= corner) & (pts < corner + side), axis=1)
    return np.flatnonzero(inside)


def checkerboard(space: MetricMeasureSpace, cells: int = 8) -> np.ndarray:
    """Cells of side 1/cells coloured by the parity of their coordinate sum."""
    if cells < 1:
        raise ConfigError(f"cells must be >= 1, got {cells}")
    block = np.floor(_coords(space) * cells + 1e-9).astype(int)
    return np.flatnonzero(block.sum(axis=1) % 2 == 0)


def random_set(space: MetricMeasureSpace, fraction: float = 0.5, seed: int = 0) -> np.ndarray:
    if not 0 <= fraction <= 1:
        raise ConfigError(f"fraction must lie in [0, 1], got {fraction}")
    rng = np.random.default_rng(seed)
    return np.flatnonzero(rng.random(space.n) < fraction)


@dataclass(frozen=True)
class ShrinkingBallsUnion:
    members: np.ndarray  # lattice points inside some ball
    boundary: np.ndarray  # lattice cells meeting some sphere
    centers: np.ndarray  # (4^k, 2) Halton points
    radii: np.ndarray  # 2^-(j+2)
    resolved: int  # balls with radius >= resolution
    perimeter_partial_sums: np.ndarray  # cumulative sum of 2 pi r_j


def shrinking_balls_union(space: MetricMeasureSpace, k: Optional[int] = None) -> ShrinkingBallsUnion:
    """
    Union of balls B(q_j, 2^-(j+2)), j < 4^k, centres enumerated by an
    unscrambled Halton sequence on the unit torus.

    Balls at or above the grid resolution contribute their interior lattice
    points to the set and every cell within half a cell diagonal of their
    sphere to the boundary. Smaller balls are truncated: they add no members
    and mark only the cell containing their centre as boundary.

    Raises:
        ConfigError: no k given or found in the space recipe, or a space that
            is not a square torus lattice
    """
    if k is None and space.recipe and space.recipe.get("builder") == "shrinkingBallsUnion":
        k = space.recipe["params"].get("k")
    if k is None or int(k) < 1:
        raise ConfigError(f"shrinkingBallsUnion needs k >= 1, got {k}")
    pts = _coords(space)
    side = int(round(np.sqrt(space.n)))
    if pts.shape[1] != 2 or side * side != space.n or space.boxsize != 1.0:
        raise ConfigError("shrinkingBallsUnion needs a square lattice on the unit torus")

    count = 4 ** int(k)
    centers = qmc.Halton(d=2, scramble=False).random(count)
    radii = 2.0 ** -(np.arange(count, dtype=float) + 2.0)
    h = 1.0 / side
    half_diagonal = h / np.sqrt(2.0)

    members = np.zeros(space.n, dtype=bool)
    boundary = np.zeros(space.n, dtype=bool)
    resolved = radii >= h
    for q, r in zip(centers[resolved], radii[resolved]):
        d = _gap_to(space, q)
        members |= d < r
        boundary |= np.abs(d - r) <= half_diagonal

    cell = np.mod(np.rint(centers[~resolved] * side).astype(int), side)
    boundary[cell[:, 0] * side + cell[:, 1]] = True

    logger.info(
        f"[BUILD] shrinking balls: {count} centres, {int(resolved.sum())} resolved, "
        f"{int(members.sum())} members, {int(boundary.sum())} boundary cells"
    )
    return ShrinkingBallsUnion(
        members=np.flatnonzero(members),
        boundary=np.flatnonzero(boundary),
        centers=centers,
        radii=radii,
        resolved=int(resolved.sum()),
        perimeter_partial_sums=np.cumsum(2.0 * np.pi * radii),
    )


def _shrinking_members(space: MetricMeasureSpace, k: Optional[int] = None) -> np.ndarray:
    return shrinking_balls_union(space, k).members


SETS: Dict[str, Callable[..., np.ndarray]] = {
    "arc": arc,
    "half": half,
    "disk": disk,
    "square": square,
    "checkerboard": checkerboard,
    "shrinkingBallsUnion": _shrinking_members,
    "random": random_set,
}


# -------------------------------------------------------
# FUNCTIONS
# -------------------------------------------------------
def sine(space: MetricMeasureSpace, freq: int = 1, axis: int = 0) -> np.ndarray:
    """sin(2 pi freq x) along one coordinate."""
    return np.sin(2.0 * np.pi * freq * _axis(space, axis))


def indicator_function(space: MetricMeasureSpace, of: str = "arc", params: Optional[Mapping[str, Any]] = None) -> np.ndarray:
    return indicator_vector(space, build_set(space, of, params or {}))


def smoothed_step(
    space: MetricMeasureSpace, start: float = 0.25, stop: float = 0.75, width: float = 0.02, axis: int = 0
) -> np.ndarray:
    """
    1/2 [tanh((x - start)/width) - tanh((x - stop)/width)]: a smooth
    indicator of [start, stop), periodic up to exp(-2 min(start, 1 - stop)/width).
    """
    if width <= 0:
        raise ConfigError(f"width must be positive, got {width}")
    x = _axis(space, axis)
    return 0.5 * (np.tanh((x - start) / width) - np.tanh((x - stop) / width))


def coordinate(space: MetricMeasureSpace, axis: int = 0) -> np.ndarray:
    return np.array(_axis(space, axis), dtype=float)


def random_integer(space: MetricMeasureSpace, low: int = 0, high: int = 10, seed: int = 0) -> np.ndarray:
    if high <= low:
        raise ConfigError(f"need low < high, got {low}, {high}")
    rng = np.random.default_rng(seed)
    return rng.integers(low, high, size=space.n).astype(float)


def tent(space: MetricMeasureSpace, center: int = 0, radius: float = 0.25) -> np.ndarray:
    """max(0, 1 - d(center, x)/radius) around a point index."""
    if radius <= 0:
        raise ConfigError(f"tent radius must be positive, got {radius}")
    return np.maximum(0.0, 1.0 - space.distances_from(center) / radius)


FUNCTIONS: Dict[str, Callable[..., np.ndarray]] = {
    "sin": sine,
    "indicator": indicator_function,
    "smoothedStep": smoothed_step,
    "coordinate": coordinate,
    "randomInteger": random_integer,
    "tent": tent,
}


# -------------------------------------------------------
# LOOKUP
# -------------------------------------------------------
def _call(registry: Dict[str, Callable[..., np.ndarray]], kind: str, space: MetricMeasureSpace, name: str, params: Mapping[str, Any]) -> np.ndarray:
    if name not in registry:
        raise ConfigError(f"unknown {kind} builder {name!r}, choose from {sorted(registry)}")
    try:
        return registry[name](space, **dict(params))
    except TypeError as exc:
        raise ConfigError(f"{kind} {name}: invalid parameters {dict(params)}: {exc}") from exc


def build_set(space: MetricMeasureSpace, name: str, params: Mapping[str, Any]) -> np.ndarray:
    """
    Raises:
        ConfigError: unknown set or invalid parameters
    """
    return _call(SETS, "set", space, name, params)


def build_function(space: MetricMeasureSpace, name: str, params: Mapping[str, Any]) -> np.ndarray:
    """
    Raises:
        ConfigError: unknown function or invalid parameters
    """
    return _call(FUNCTIONS, "function", space, name, params)
