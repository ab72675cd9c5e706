# generator/generator.py
"""
mu-symmetric Markov generators on finite metric measure spaces.

The off-diagonal entries are A(i, j) = c * theta(d(i, j) / h) * mu(j), which
makes mu(i) A(i, j) symmetric. The single constant c is fixed so that the
mu-averaged carre du champ of a coordinate function equals 1: on the uniform
circle this is exactly the second-difference stencil, on the 2D torus the
five-point Laplacian. The diagonal makes every row sum vanish.
"""

import logging
from functools import cached_property
from typing import Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from mmspace.errors import ConfigError, NumericalError
from mmspace.space import MetricMeasureSpace
from observability.obs import timer

logger = logging.getLogger("heatperim")

KERNELS = ("indicator", "gaussian")
RULES = ("radius", "knn")

# gaussian weights are cut off beyond this multiple of h
GAUSSIAN_CUTOFF = 3.0


def _theta(kernel: str, s: np.ndarray) -> np.ndarray:
    if kernel == "indicator":
        return np.ones_like(s)
    if kernel == "gaussian":
        return np.exp(-s ** 2)
    raise ConfigError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")


class Generator:
    """
    Sparse generator A with its edge list.

    Attributes:
        space: Underlying metric measure space
        A: csr matrix, units 1/time
        h: Connection scale
        rule: "radius", "knn" or "explicit"
        kernel: Weight profile theta
        calibration: Constant c (nan for explicit matrices)
    """

    def __init__(
        self,
        space: MetricMeasureSpace,
        A: sparse.spmatrix,
        *,
        h: float,
        rule: str,
        kernel: str = "indicator",
        calibration: float = float("nan"),
    ) -> None:
        A = sparse.csr_matrix(A, dtype=float)
        A.sum_duplicates()
        A.sort_indices()
        if A.shape != (space.n, space.n):
            raise ConfigError(f"generator shape {A.shape} does not match n={space.n}")
        self.space = space
        self.A = A
        self.h = float(h)
        self.rule = rule
        self.kernel = kernel
        self.calibration = float(calibration)

        coo = A.tocoo()
        off = coo.row != coo.col
        self.I = coo.row[off].astype(int)
        self.J = coo.col[off].astype(int)
        self.a = coo.data[off].astype(float)
        self.d = space.pair_distances(self.I, self.J) if self.I.size else np.zeros(0)
        for arr in (self.I, self.J, self.a, self.d):
            arr.setflags(write=False)

    @classmethod
    def from_matrix(cls, space: MetricMeasureSpace, A, h: float = 1.0) -> "Generator":
        """Wrap an explicit matrix after checking the generator invariants."""
        gen = cls(space, A, h=h, rule="explicit")
        gen.check_invariants()
        return gen

    # -------------------------------------------------------
    # BASIC QUANTITIES
    # -------------------------------------------------------
    @property
    def n(self) -> int:
        return self.space.n

    @property
    def mu(self) -> np.ndarray:
        return self.space.mu

    @cached_property
    def degree(self) -> np.ndarray:
        """Total jump rate sum_{j != i} A(i, j)."""
        return np.bincount(self.I, weights=self.a, minlength=self.n)

    def apply(self, f: np.ndarray) -> np.ndarray:
        return self.A @ np.asarray(f, dtype=float)

    def scaled(self, c: float) -> "Generator":
        """Generator c*A on the same space."""
        return Generator(
            self.space, self.A * c, h=self.h, rule=self.rule, kernel=self.kernel,
            calibration=self.calibration * c,
        )

    def check_invariants(self, tol: float = 1e-12) -> None:
        """
        Raises:
            ConfigError: negative jump rates, nonzero row sums, or a broken
                mu-symmetry
        """
        if np.any(self.a < 0):
            raise ConfigError("generator has negative off-diagonal entries")
        scale = max(float(np.abs(self.A.diagonal()).max(initial=0.0)), 1.0)
        rows = np.asarray(self.A.sum(axis=1)).ravel()
        if np.any(np.abs(rows) > tol * scale):
            raise ConfigError(f"row sums not zero (max {np.abs(rows).max():.3g})")
        flux = sparse.diags(self.mu) @ self.A
        asym = abs(flux - flux.T)
        if asym.nnz and asym.max() > tol * max(abs(flux).max(), 1.0):
            raise ConfigError("generator is not mu-symmetric")

    def components(self) -> Tuple[int, np.ndarray]:
        return csgraph.connected_components(self.A, directed=False)

    def __repr__(self) -> str:
        return f"Generator(space={self.space.label!r}, n={self.n}, rule={self.rule}, h={self.h:.4g})"


# -------------------------------------------------------
# CONSTRUCTION
# -------------------------------------------------------
def _knn_pairs(space: MetricMeasureSpace, k: int) -> Tuple[np.ndarray, np.ndarray]:
    if not 1 <= k < space.n:
        raise ConfigError(f"k must satisfy 1 <= k < n={space.n}, got {k}")
    if space.is_generated:
        _, idx = space.tree.query(space.points, k=k + 1)
        idx = np.asarray(idx)[:, 1:]
    else:
        order = np.argsort(space.dist, axis=1, kind="stable")
        idx = np.array([[j for j in row if j != i][:k] for i, row in enumerate(order)])
    I = np.repeat(np.arange(space.n), k)
    J = idx.ravel()
    # symmetric union of the directed neighbour lists
    pairs = np.unique(np.concatenate([np.stack([I, J], 1), np.stack([J, I], 1)]), axis=0)
    return pairs[:, 0], pairs[:, 1]


def build_generator(
    space: MetricMeasureSpace,
    rule: str = "radius",
    h: Optional[float] = None,
    k: Optional[int] = None,
    kernel: str = "indicator",
) -> Generator:
    """
    Calibrated generator of a proximity graph.

    Args:
        space: The metric measure space
        rule: "radius" (pairs with d <= h) or "knn" (symmetric k-nearest
            neighbours, h = largest neighbour distance)
        h: Connection radius for the radius rule (default: resolution)
        k: Neighbour count for the knn rule
        kernel: "indicator" or "gaussian" (cut off at 3h)

    Returns:
        Generator with mu-symmetric, conservative A

    Raises:
        ConfigError: unknown rule or kernel, h too small (no edges)
        NumericalError: disconnected proximity graph
    """
    if rule not in RULES:
        raise ConfigError(f"unknown rule {rule!r}; expected one of {RULES}")
    if kernel not in KERNELS:
        raise ConfigError(f"unknown kernel {kernel!r}; expected one of {KERNELS}")
    if space.n < 2:
        raise ConfigError("a generator needs at least two points")

    with timer("build_generator"):
        if rule == "radius":
            h = float(h) if h is not None else space.resolution
            if h <= 0:
                raise ConfigError(f"h must be positive, got {h}")
            if h < 2 * space.min_spacing:
                logger.warning(f"[GEN] h={h:.4g} is below twice the minimal spacing {space.min_spacing:.4g}")
            reach = GAUSSIAN_CUTOFF * h if kernel == "gaussian" else h
            I, J, D = space.neighbor_pairs(reach, closed=True)
        else:
            if k is None:
                raise ConfigError("knn rule needs k")
            I, J = _knn_pairs(space, int(k))
            D = space.pair_distances(I, J)
            h = float(D.max())

        if I.size == 0:
            raise ConfigError(f"h={h:.4g} too small: no pair of points within the connection radius")

        theta = _theta(kernel, D / h)
        mu = space.mu
        # mu-averaged carre du champ of a coordinate function, before scaling
        raw = np.bincount(I, weights=theta * mu[J] * D ** 2 / 2, minlength=space.n)
        c = space.dim / (float(np.dot(mu, raw)) / space.total_measure)

        off = c * theta * mu[J]
        diag = -np.bincount(I, weights=off, minlength=space.n)
        rows = np.concatenate([I, np.arange(space.n)])
        cols = np.concatenate([J, np.arange(space.n)])
        A = sparse.csr_matrix((np.concatenate([off, diag]), (rows, cols)), shape=(space.n, space.n))

    gen = Generator(space, A, h=h, rule=rule, kernel=kernel, calibration=c)

    count, labels = gen.components()
    if count > 1:
        sizes = np.bincount(labels)
        firsts = [int(np.flatnonzero(labels == c_)[0]) for c_ in range(count)]
        raise NumericalError(
            f"proximity graph is disconnected: {count} components, sizes {sizes.tolist()}, "
            f"first points {firsts}"
        )

    logger.info(f"[GEN] {space.label or 'space'}: {I.size} directed edges, h={h:.4g}, c={c:.6g}")
    return gen


# -------------------------------------------------------
# FORMS
# -------------------------------------------------------
def dirichlet_energy(gen: Generator, u: np.ndarray, v: np.ndarray) -> float:
    """E(u, v) = -sum_i mu(i) u(i) (Av)(i)."""
    u = np.asarray(u, dtype=float)
    return float(-np.dot(gen.mu * u, gen.apply(v)))


def carre_du_champ(gen: Generator, f: np.ndarray, g: Optional[np.ndarray] = None) -> np.ndarray:
    """Gamma(f, g)(i) = 1/2 sum_j A(i, j) (f_j - f_i)(g_j - g_i); g defaults to f."""
    f = np.asarray(f, dtype=float)
    df = f[gen.J] - f[gen.I]
    if g is None:
        dg = df
    else:
        g = np.asarray(g, dtype=float)
        dg = g[gen.J] - g[gen.I]
    return 0.5 * np.bincount(gen.I, weights=gen.a * df * dg, minlength=gen.n)
