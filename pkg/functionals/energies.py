# functionals/energies.py
"""
Near-diagonal energies.

The strip of width eps is the set of ordered pairs (x, y) with
0 < d(x, y) < eps, each weighted by

    mu(x) mu(y) / sqrt(mu(B_eps(x)) mu(B_eps(y)))

The Korevaar-Schoen energy, the Maz'ya normalisation, the co-area-type
quantity and the conductor capacity are all sums over that strip.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache

import networkx as nx
import numpy as np

from mmspace.space import MetricMeasureSpace

logger = logging.getLogger("heatperim")

# strips narrower than this multiple of the resolution are out of window
STRIP_WINDOW_FACTOR = 2.0


@dataclass(frozen=True)
class DiagonalStrip:
    eps: float
    I: np.ndarray
    J: np.ndarray
    weight: np.ndarray
    in_window: bool

    @classmethod
    def build(cls, space: MetricMeasureSpace, eps: float) -> "DiagonalStrip":
        if eps <= 0:
            raise ValueError(f"strip width must be positive, got {eps}")
        I, J, _ = space.neighbor_pairs(eps)
        volume = space.ball_measures(eps)
        weight = space.mu[I] * space.mu[J] / np.sqrt(volume[I] * volume[J])
        in_window = bool(I.size) and eps >= STRIP_WINDOW_FACTOR * space.resolution
        if not in_window:
            logger.warning(f"[ENERGY] strip eps={eps:.3g} is out of window ({I.size} pair(s))")
        return cls(float(eps), I, J, weight, in_window)

    def crossing_mass(self, chi: np.ndarray) -> float:
        """One-sided strip mass: pairs with x inside and y outside."""
        inside = chi > 0
        return float(self.weight[inside[self.I] & ~inside[self.J]].sum())


@dataclass(frozen=True)
class MazyaCoarea:
    value: float
    energy: float
    ratio: float


# strips are reused across functions evaluated on the same space and width
@lru_cache(maxsize=8)
def _cached_strip(space: MetricMeasureSpace, eps: float) -> DiagonalStrip:
    return DiagonalStrip.build(space, eps)


def diagonal_strip(space: MetricMeasureSpace, eps: float) -> DiagonalStrip:
    return _cached_strip(space, float(eps))


def near_diagonal_energy(space: MetricMeasureSpace, u: np.ndarray, eps: float) -> float:
    """
    (1/eps) sum over the strip of weight * |u(x) - u(y)|.

    An empty strip gives 0 and is flagged out of window.
    """
    strip = diagonal_strip(space, eps)
    if strip.I.size == 0:
        return 0.0
    u = np.asarray(u, dtype=float)
    return float(np.dot(strip.weight, np.abs(u[strip.I] - u[strip.J]))) / strip.eps


def mazya_energy(space: MetricMeasureSpace, u: np.ndarray, a: float) -> float:
    """Maz'ya normalisation: the near-diagonal energy at eps = a - 1."""
    if a <= 1:
        raise ValueError(f"a must exceed 1, got {a}")
    return near_diagonal_energy(space, u, a - 1.0)


def mazya_coarea_quantity(space: MetricMeasureSpace, u: np.ndarray, eps: float) -> MazyaCoarea:
    """
    (1/eps) integral over t >= 0 of the one-sided strip mass of {u > t},
    computed exactly over the distinct values of u.

    Raises:
        ValueError: u has negative values
    """
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("the co-area quantity needs u >= 0")
    strip = diagonal_strip(space, eps)
    levels = np.union1d([0.0], u)

    total = 0.0
    for lo, hi in zip(levels[:-1], levels[1:]):
        total += strip.crossing_mass((u > lo).astype(float)) * (hi - lo)
    value = total / strip.eps

    energy = near_diagonal_energy(space, u, eps)
    ratio = value / energy if energy > 0 else float("nan")
    return MazyaCoarea(value=value, energy=energy, ratio=ratio)


def conductor_capacity(space: MetricMeasureSpace, u: np.ndarray, a: float, t: float) -> float:
    """
    L1 capacity of the condenser ({u > a t}, {u > t}) for the Maz'ya form.

    Computed exactly as a minimum cut: every unordered strip pair (x, y),
    eps = a - 1, carries capacity 2 weight / (a - 1); the source is tied to
    {u > a t} and the sink to the complement of {u > t} by uncapacitated
    (infinite) edges.

    Raises:
        ValueError: a <= 1, t <= 0, or an infeasible terminal configuration
    """
    if a <= 1:
        raise ValueError(f"a must exceed 1, got {a}")
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    u = np.asarray(u, dtype=float)
    inner = np.flatnonzero(u > a * t)
    outer_mask = u > t
    if inner.size == 0:
        raise ValueError(f"{{u > {a * t:g}}} is empty")
    if outer_mask.all():
        raise ValueError(f"{{u > {t:g}}} is the whole space")

    strip = diagonal_strip(space, a - 1.0)
    graph = nx.DiGraph()
    graph.add_nodes_from(range(space.n))
    # a cut crosses each unordered pair in one direction only
    upper = strip.I < strip.J
    for x, y, w in zip(strip.I[upper], strip.J[upper], strip.weight[upper]):
        cap = 2.0 * float(w) / (a - 1.0)
        graph.add_edge(int(x), int(y), capacity=cap)
        graph.add_edge(int(y), int(x), capacity=cap)
    for x in inner:
        graph.add_edge("source", int(x))
    for y in np.flatnonzero(~outer_mask):
        graph.add_edge(int(y), "sink")

    value, _ = nx.minimum_cut(graph, "source", "sink", capacity="capacity")
    logger.debug(f"[ENERGY] conductor capacity a={a:g} t={t:g}: {value:.6g}")
    return float(value)
