# generator/intrinsic.py
"""
Shortest-path surrogate for the intrinsic metric d_E.

Edge (i, j) gets length min over its endpoints v of sqrt(2 / deg(v)), with
deg(v) the total jump rate at v. A path coordinate growing by that length per
edge keeps Gamma <= 1 at both endpoints, so the path distance is an admissible
lower-bound surrogate for the sup defining d_E. On the calibrated circle it is
the arc distance.
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from generator.generator import Generator
from mmspace.errors import NumericalError

logger = logging.getLogger("heatperim")

LABEL = "surrogate"


def edge_lengths(gen: Generator) -> sparse.csr_matrix:
    step = np.sqrt(2.0 / gen.degree)
    lengths = np.minimum(step[gen.I], step[gen.J])
    return sparse.csr_matrix((lengths, (gen.I, gen.J)), shape=(gen.n, gen.n))


def intrinsic_metric(gen: Generator, x: int) -> np.ndarray:
    """
    d_E(x, .) by Dijkstra on the calibrated edge lengths.

    Raises:
        NumericalError: some point is unreachable from x
    """
    gen.space._check_index(x)
    dist = csgraph.dijkstra(edge_lengths(gen), directed=False, indices=int(x))
    if not np.all(np.isfinite(dist)):
        missing = int(np.flatnonzero(~np.isfinite(dist))[0])
        raise NumericalError(f"point {missing} is unreachable from {x}: graph is disconnected")
    return dist


@dataclass(frozen=True)
class BiLipschitzReport:
    ratio_min: float
    ratio_max: float
    label: str = LABEL

    @property
    def spread(self) -> float:
        return self.ratio_max / self.ratio_min


def bilipschitz_ratio(gen: Generator, sources: Sequence[int], max_distance: float = np.inf) -> BiLipschitzReport:
    """Range of d_E / d over pairs (x, y), x in sources, 0 < d(x, y) <= max_distance."""
    ratios = []
    for x in sources:
        d_e = intrinsic_metric(gen, int(x))
        d = gen.space.distances_from(int(x))
        keep = (d > 0) & (d <= max_distance)
        ratios.append(d_e[keep] / d[keep])
    ratios = np.concatenate(ratios)
    report = BiLipschitzReport(float(ratios.min()), float(ratios.max()))
    logger.info(f"[GEN] intrinsic/metric ratio in [{report.ratio_min:.4g}, {report.ratio_max:.4g}] ({LABEL})")
    return report
