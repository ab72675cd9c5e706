# mmspace/space.py
"""
Finite metric measure spaces.

A space is a finite point set with a metric and strictly positive measure
weights. Two backends exist:

- dense: an explicit symmetric distance matrix (small or hand-made spaces)
- generated: coordinates, optionally periodic with a box size, queried through
  a scipy cKDTree (every builder space; the torus lattices are too large for a
  dense matrix)

Spaces are immutable after construction and every query is pure, so they can
be shared between worker threads.
"""

import hashlib
import logging
from functools import cached_property
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from mmspace.errors import ConfigError

logger = logging.getLogger("heatperim")

# Relative slack used for closed-ball and connection-radius queries
CLOSED_SLACK = 1e-9

# Builders producing translation-invariant (periodic) lattices
LATTICE_BUILDERS = frozenset({"circle", "torus2d", "shrinkingBallsUnion"})

_EXHAUSTIVE_TRIANGLE_LIMIT = 256
_RANDOM_TRIPLES = 10_000


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


class MetricMeasureSpace:
    """
    Discrete stand-in for (X, d, mu).

    Args:
        mu: strictly positive measure weights, one per point
        dist: dense symmetric distance matrix (dense backend)
        points: (n, dim) coordinates (generated backend)
        boxsize: period of the coordinates; None for non-periodic spaces
        label: free-form provenance tag
        recipe: {"builder": name, "params": {...}} for generated spaces
        dim: coordinate dimension used by generator calibration
    """

    def __init__(
        self,
        mu: np.ndarray,
        *,
        dist: Optional[np.ndarray] = None,
        points: Optional[np.ndarray] = None,
        boxsize: Optional[float] = None,
        label: str = "",
        recipe: Optional[Dict[str, Any]] = None,
        dim: Optional[int] = None,
    ) -> None:
        if (dist is None) == (points is None):
            raise ConfigError("exactly one of dist or points must be given")

        mu = np.array(mu, dtype=float).ravel()
        if mu.size == 0:
            raise ConfigError("a space needs at least one point")
        if not np.all(np.isfinite(mu)) or np.any(mu <= 0):
            raise ConfigError("measure weights must be finite and strictly positive")

        self.mu = _readonly(mu)
        self.label = label
        self.recipe = recipe
        self.boxsize = None if boxsize is None else float(boxsize)

        if dist is not None:
            dist = np.array(dist, dtype=float)
            if dist.shape != (mu.size, mu.size):
                raise ConfigError(f"distance matrix shape {dist.shape} does not match n={mu.size}")
            self._dense = _readonly(dist)
            self.points = None
            self.dim = int(dim) if dim is not None else 1
        else:
            pts = np.array(points, dtype=float)
            if pts.ndim == 1:
                pts = pts[:, None]
            if pts.shape[0] != mu.size:
                raise ConfigError(f"{pts.shape[0]} points but {mu.size} measure weights")
            if self.boxsize is not None and (np.any(pts < 0) or np.any(pts >= self.boxsize)):
                raise ConfigError("periodic coordinates must lie in [0, boxsize)")
            self._dense = None
            self.points = _readonly(pts)
            self.dim = int(dim) if dim is not None else pts.shape[1]

        self._check_metric()

    # -------------------------------------------------------
    # BASIC PROPERTIES
    # -------------------------------------------------------
    @property
    def n(self) -> int:
        return int(self.mu.size)

    @property
    def total_measure(self) -> float:
        return float(self.mu.sum())

    @property
    def is_generated(self) -> bool:
        return self.points is not None

    @property
    def is_lattice(self) -> bool:
        return self.recipe is not None and self.recipe.get("builder") in LATTICE_BUILDERS

    @cached_property
    def tree(self) -> cKDTree:
        if self.points is None:
            raise ConfigError("dense spaces have no coordinate tree")
        return cKDTree(self.points, boxsize=self.boxsize)

    @cached_property
    def dist(self) -> np.ndarray:
        """Dense distance matrix (materialized on demand for generated spaces)."""
        if self._dense is not None:
            return self._dense
        rows = [self.distances_from(x) for x in range(self.n)]
        return _readonly(np.vstack(rows))

    @cached_property
    def mu_hash(self) -> str:
        return hashlib.sha256(np.ascontiguousarray(self.mu).tobytes()).hexdigest()

    # -------------------------------------------------------
    # DISTANCES
    # -------------------------------------------------------
    def _coordinate_gap(self, diff: np.ndarray) -> np.ndarray:
        diff = np.abs(diff)
        if self.boxsize is not None:
            diff = np.minimum(diff, self.boxsize - diff)
        return diff

    def distances_from(self, x: int) -> np.ndarray:
        """Row d(x, .) of the metric."""
        self._check_index(x)
        if self._dense is not None:
            return self._dense[x]
        gap = self._coordinate_gap(self.points - self.points[x])
        return np.sqrt(np.einsum("ij,ij->i", gap, gap))

    def pair_distances(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        """Vectorized d(i_k, j_k)."""
        i = np.asarray(i, dtype=int)
        j = np.asarray(j, dtype=int)
        if self._dense is not None:
            return self._dense[i, j]
        gap = self._coordinate_gap(self.points[i] - self.points[j])
        return np.sqrt(np.einsum("ij,ij->i", gap, gap))

    def distance_to_set(self, subset: np.ndarray) -> np.ndarray:
        """d(x, E) for every x; +inf everywhere when E is empty."""
        subset = np.asarray(subset, dtype=int)
        if subset.size == 0:
            return np.full(self.n, np.inf)
        if self._dense is not None:
            return self._dense[:, subset].min(axis=1)
        sub_tree = cKDTree(self.points[subset], boxsize=self.boxsize)
        d, _ = sub_tree.query(self.points, k=1)
        return np.asarray(d, dtype=float)

    def neighbor_pairs(self, r: float, closed: bool = False) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        All ordered pairs (i, j), i != j, with d(i, j) < r (open) or
        d(i, j) <= r(1 + CLOSED_SLACK) (closed).

        Returns:
            Tuple (I, J, D) sorted by (I, J)
        """
        if r <= 0:
            raise ValueError(f"radius must be positive, got {r}")
        reach = r * (1.0 + CLOSED_SLACK) if closed else r

        if self._dense is not None:
            mask = self._dense <= reach if closed else self._dense < reach
            np.fill_diagonal(mask, False)
            I, J = np.nonzero(mask)
            return I, J, self._dense[I, J]

        found = self.tree.sparse_distance_matrix(self.tree, max_distance=reach, output_type="ndarray")
        I = found["i"].astype(int)
        J = found["j"].astype(int)
        D = found["v"].astype(float)
        keep = I != J
        keep &= (D <= reach) if closed else (D < reach)
        I, J, D = I[keep], J[keep], D[keep]
        order = np.lexsort((J, I))
        return I[order], J[order], D[order]

    def ball_measures(self, r: float) -> np.ndarray:
        """mu(B_r(x)) for every x (open balls)."""
        I, J, _ = self.neighbor_pairs(r)
        return self.mu + np.bincount(I, weights=self.mu[J], minlength=self.n)

    # -------------------------------------------------------
    # SCALES
    # -------------------------------------------------------
    @cached_property
    def _nearest_gaps(self) -> np.ndarray:
        if self.n == 1:
            return np.array([np.inf])
        if self._dense is not None:
            d = self._dense.copy()
            d[d <= 0] = np.inf
            return d.min(axis=1)
        k = min(self.n, 8)
        d, _ = self.tree.query(self.points, k=k)
        d = np.where(d > 0, d, np.inf)
        return d.min(axis=1)

    @cached_property
    def min_spacing(self) -> float:
        """Minimal positive interpoint distance."""
        return float(self._nearest_gaps.min())

    @cached_property
    def resolution(self) -> float:
        """Grid resolution: the largest nearest-neighbour distance."""
        gaps = self._nearest_gaps[np.isfinite(self._nearest_gaps)]
        return float(gaps.max()) if gaps.size else 0.0

    @cached_property
    def diameter(self) -> float:
        if self._dense is not None:
            return float(self._dense.max())
        best = 0.0
        chunk = max(1, 2_000_000 // max(self.n, 1))
        for start in range(0, self.n, chunk):
            rows = self.points[start:start + chunk]
            gap = self._coordinate_gap(rows[:, None, :] - self.points[None, :, :])
            best = max(best, float(np.sqrt((gap ** 2).sum(axis=2)).max()))
        return best

    # -------------------------------------------------------
    # VALIDATION
    # -------------------------------------------------------
    def _check_index(self, x: int) -> None:
        if not 0 <= int(x) < self.n:
            raise IndexError(f"point index {x} out of range for n={self.n}")

    def _check_metric(self) -> None:
        tol = 1e-12
        if self._dense is not None:
            d = self._dense
            scale = max(float(np.abs(d).max()), 1.0)
            if np.any(np.diag(d) != 0):
                raise ConfigError("metric violates d(i,i) = 0")
            if np.any(d < 0):
                raise ConfigError("metric has negative distances")
            if not np.allclose(d, d.T, rtol=0, atol=tol * scale):
                raise ConfigError("metric is not symmetric")
            if self.n <= _EXHAUSTIVE_TRIANGLE_LIMIT:
                for k in range(self.n):
                    if np.any(d > d[:, k:k + 1] + d[k:k + 1, :] + tol * scale):
                        raise ConfigError(f"triangle inequality fails through point {k}")
                return

        rng = np.random.default_rng(0)
        i, j, k = rng.integers(0, self.n, size=(3, _RANDOM_TRIPLES))
        dij = self.pair_distances(i, j)
        bound = self.pair_distances(i, k) + self.pair_distances(k, j)
        scale = max(float(dij.max(initial=0.0)), 1.0)
        if np.any(dij > bound + tol * scale):
            raise ConfigError("triangle inequality fails on sampled triples")

    def __repr__(self) -> str:
        backend = "generated" if self.is_generated else "dense"
        return f"MetricMeasureSpace(label={self.label!r}, n={self.n}, backend={backend})"


# -------------------------------------------------------
# BALL QUERIES
# -------------------------------------------------------
def ball(space: MetricMeasureSpace, x: int, r: float) -> np.ndarray:
    """Open ball {y : d(x, y) < r}, sorted indices; always contains x."""
    if r <= 0:
        raise ValueError(f"radius must be positive, got {r}")
    return np.flatnonzero(space.distances_from(x) < r)


def ball_measure(space: MetricMeasureSpace, x: int, r: float) -> float:
    """mu(B_r(x)), strictly positive."""
    return float(space.mu[ball(space, x, r)].sum())


def closed_ball(space: MetricMeasureSpace, x: int, r: float) -> np.ndarray:
    """Closed ball {y : d(x, y) <= r} with the repository's relative slack."""
    return np.flatnonzero(space.distances_from(x) <= r * (1.0 + CLOSED_SLACK))


def indicator(space: MetricMeasureSpace, subset: np.ndarray) -> np.ndarray:
    """chi_E as a float vector."""
    chi = np.zeros(space.n)
    chi[np.asarray(subset, dtype=int)] = 1.0
    return chi
