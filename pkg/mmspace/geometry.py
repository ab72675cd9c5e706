# mmspace/geometry.py
"""
Geometric set operations: tubular neighbourhoods, Minkowski content ladders,
the finite-scale Sigma_gamma boundary, and radius ladder helpers.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from functionals.ladder import FunctionalLadder, check_decreasing, summarize_ladder
from mmspace.errors import ConfigError
from mmspace.space import MetricMeasureSpace

logger = logging.getLogger("heatperim")

# radii below this multiple of the grid resolution are outside the trusted window
TUBE_WINDOW_FACTOR = 4.0


# -------------------------------------------------------
# LADDER HELPERS
# -------------------------------------------------------
def lattice_ladder(lo: float, hi: float, count: int, resolution: float, offset: float = 0.5) -> np.ndarray:
    """
    Geometric ladder from hi down to lo, snapped to (m + offset) * resolution.

    Snapping keeps every radius strictly between lattice distances, so open
    and closed balls agree and no tie d == r occurs. Duplicates created by the
    snapping are dropped.

    Returns:
        Strictly decreasing array of radii
    """
    if not 0 < lo <= hi:
        raise ConfigError(f"need 0 < lo <= hi, got lo={lo}, hi={hi}")
    if count < 1:
        raise ConfigError(f"count must be >= 1, got {count}")
    if resolution <= 0:
        raise ConfigError(f"resolution must be positive, got {resolution}")

    raw = np.geomspace(hi, lo, count)
    m = np.maximum(np.round(raw / resolution - offset), 0.0)
    snapped = (m + offset) * resolution
    return np.unique(snapped)[::-1]


def time_ladder_from_sqrt(sqrt_lo: float, sqrt_hi: float, count: int) -> np.ndarray:
    """Times t with sqrt(t) geometric between sqrt_hi and sqrt_lo, decreasing."""
    if not 0 < sqrt_lo <= sqrt_hi:
        raise ConfigError(f"need 0 < sqrt_lo <= sqrt_hi, got {sqrt_lo}, {sqrt_hi}")
    return np.geomspace(sqrt_hi, sqrt_lo, count) ** 2


# -------------------------------------------------------
# TUBES AND CONTENT
# -------------------------------------------------------
def tubular_neighborhood(space: MetricMeasureSpace, subset: Sequence[int], r: float) -> np.ndarray:
    """Union of the open r-balls centred in the subset."""
    if r <= 0:
        raise ValueError(f"radius must be positive, got {r}")
    return np.flatnonzero(space.distance_to_set(np.asarray(subset, dtype=int)) < r)


def vertex_boundary(space: MetricMeasureSpace, subset: Sequence[int], radius: Optional[float] = None) -> np.ndarray:
    """
    Points on either side of the cut: members of E with a neighbour outside
    and outsiders with a neighbour in E. Neighbours are the closed balls of
    the given radius (default: grid resolution).
    """
    radius = space.resolution if radius is None else radius
    inside = np.zeros(space.n, dtype=bool)
    inside[np.asarray(subset, dtype=int)] = True
    I, J, _ = space.neighbor_pairs(radius, closed=True)
    crossing = inside[I] != inside[J]
    marked = np.zeros(space.n, dtype=bool)
    marked[I[crossing]] = True
    return np.flatnonzero(marked)


def minkowski_content(
    space: MetricMeasureSpace,
    boundary: Sequence[int],
    r_ladder: Sequence[float],
    name: str = "minkowskiContent",
) -> FunctionalLadder:
    """
    mu(boundary^r) / r along a radius ladder.

    The limit estimate is the minimum over the trusted window
    (r >= 4 * resolution).

    Raises:
        ConfigError: empty or non-decreasing ladder, or a radius below the
            grid resolution
    """
    radii = check_decreasing(r_ladder, "radius ladder")
    if radii[-1] < space.resolution:
        raise ConfigError(f"radius {radii[-1]:.3g} is below the grid resolution {space.resolution:.3g}")

    dist = space.distance_to_set(np.asarray(boundary, dtype=int))
    values = [float(space.mu[dist < r].sum()) / r for r in radii]

    ladder = summarize_ladder(
        name, space.label, radii, values, TUBE_WINDOW_FACTOR * space.resolution, estimator="min"
    )
    logger.debug(f"[GEOM] {name}: window min {ladder.window_min:.6g}")
    return ladder


def tube_growth(ladder: FunctionalLadder, r_coarse: float, r_fine: float) -> float:
    """Ratio of the content at the sample closest to r_fine to the one closest to r_coarse."""
    params = ladder.params
    values = ladder.values
    coarse = values[int(np.argmin(np.abs(params - r_coarse)))]
    fine = values[int(np.argmin(np.abs(params - r_fine)))]
    if coarse == 0.0:
        return float("nan")
    return float(fine / coarse)


# -------------------------------------------------------
# MEASURE-THEORETIC BOUNDARY
# -------------------------------------------------------
def sigma_gamma_boundary(
    space: MetricMeasureSpace,
    subset: Sequence[int],
    gamma: float,
    r_ladder: Sequence[float],
) -> np.ndarray:
    """
    Points x where, for some r on the ladder,
    min(mu(B_r(x) & E), mu(B_r(x) - E)) / mu(B_r(x)) >= gamma.

    Finite-scale surrogate of Sigma_gamma: the limsup over r is replaced by a
    max over the ladder.
    """
    if not 0 < gamma <= 0.5:
        raise ValueError(f"gamma must lie in (0, 1/2], got {gamma}")
    radii = check_decreasing(r_ladder, "radius ladder")

    chi = np.zeros(space.n)
    chi[np.asarray(subset, dtype=int)] = 1.0
    inside_mu = chi * space.mu

    best = np.zeros(space.n)
    for r in radii:
        I, J, _ = space.neighbor_pairs(r)
        total = space.mu + np.bincount(I, weights=space.mu[J], minlength=space.n)
        inside = inside_mu + np.bincount(I, weights=inside_mu[J], minlength=space.n)
        frac = np.minimum(inside, total - inside) / total
        best = np.maximum(best, frac)

    # tolerance guards fractions that equal gamma in exact arithmetic
    return np.flatnonzero(best >= gamma * (1.0 - 1e-12))
