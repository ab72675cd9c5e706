# mmspace/covering.py
"""
Epsilon-nets with bounded overlap and the tent partition of unity built on
top of them.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import sparse

from mmspace.errors import NumericalError
from mmspace.space import MetricMeasureSpace
from observability.obs import timer

logger = logging.getLogger("heatperim")


@dataclass(frozen=True)
class EpsilonNet:
    eps: float
    centers: np.ndarray
    overlap: int
    lam: float = 1.0
    degenerate: bool = False  # eps below the minimal spacing: every point is a centre

    @property
    def size(self) -> int:
        return int(self.centers.size)


@dataclass(frozen=True)
class PartitionOfUnity:
    eps: float
    phi: sparse.csr_matrix  # n_centers x n
    lip_bound: np.ndarray  # measured per-function Lipschitz constant
    net: EpsilonNet

    @property
    def lip_constant(self) -> float:
        """Measured C in lip(phi_i) <= C / eps."""
        if self.lip_bound.size == 0:
            return 0.0
        return float(self.lip_bound.max() * self.eps)


def epsilon_net(space: MetricMeasureSpace, eps: float, lam: float = 1.0) -> EpsilonNet:
    """
    Greedy maximal eps/2-separated subset, scanned in ascending index order.

    A point becomes a centre when it is at distance >= eps/2 from every
    centre chosen so far. Every point ends up within eps of a centre, and the
    overlap of the dilated balls B_{4 lam eps}(x_i) is measured.

    Args:
        space: The metric measure space
        eps: Net radius
        lam: Poincare dilation used for the overlap count (default: 1.0)

    Raises:
        ValueError: if eps <= 0
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")

    degenerate = space.n > 1 and eps < space.min_spacing
    if degenerate:
        logger.warning(f"[NET] eps={eps:.3g} below minimal spacing {space.min_spacing:.3g}; net is every point")

    with timer("epsilon_net"):
        nearest = np.full(space.n, np.inf)
        centers = []
        for x in range(space.n):
            if nearest[x] >= eps / 2:
                centers.append(x)
                nearest = np.minimum(nearest, space.distances_from(x))

        counts = np.zeros(space.n, dtype=int)
        for c in centers:
            counts += space.distances_from(c) < 4 * lam * eps

    net = EpsilonNet(
        eps=float(eps),
        centers=np.array(centers, dtype=int),
        overlap=int(counts.max()),
        lam=float(lam),
        degenerate=bool(degenerate),
    )
    logger.info(f"[NET] eps={eps:.3g}: {net.size} centre(s), overlap {net.overlap}")
    return net


def partition_of_unity(space: MetricMeasureSpace, net: EpsilonNet, edge_radius: Optional[float] = None) -> PartitionOfUnity:
    """
    Normalised tents psi_i(x) = max(0, 1 - d(x, x_i) / (2 eps)).

    Lipschitz constants are measured on the proximity edges d < edge_radius
    (default 1.5 * resolution).

    Raises:
        NumericalError: when some point has no tent covering it
    """
    eps = net.eps
    rows, cols, vals = [], [], []
    for i, c in enumerate(net.centers):
        psi = 1.0 - space.distances_from(int(c)) / (2 * eps)
        support = np.flatnonzero(psi > 0)
        rows.append(np.full(support.size, i))
        cols.append(support)
        vals.append(psi[support])

    shape = (net.size, space.n)
    psi = sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=shape
    )
    total = np.asarray(psi.sum(axis=0)).ravel()
    uncovered = np.flatnonzero(total <= 0)
    if uncovered.size:
        raise NumericalError(f"point {int(uncovered[0])} is not covered by the net (eps={eps})")

    phi = sparse.csr_matrix(psi @ sparse.diags(1.0 / total))

    if edge_radius is None:
        edge_radius = 1.5 * space.resolution
    lip = np.zeros(net.size)
    if edge_radius > 0 and space.n > 1:
        I, J, D = space.neighbor_pairs(edge_radius)
        for i in range(net.size):
            row = phi.getrow(i).toarray().ravel()
            if I.size:
                lip[i] = float(np.max(np.abs(row[I] - row[J]) / D))

    logger.info(f"[NET] partition of unity: {net.size} function(s), lip*eps <= {lip.max(initial=0.0) * eps:.3g}")
    return PartitionOfUnity(eps=eps, phi=phi, lip_bound=lip, net=net)
