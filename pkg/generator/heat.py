# generator/heat.py
"""
Heat semigroup T_t = exp(tA).

Two strategies:
- spectral: eigendecomposition of the symmetrised matrix
  S = D^{1/2} A D^{-1/2}, D = diag(mu), computed once at construction
- krylov: scipy's expm_multiply action, no factorization

The operator is read-only after construction; apply() is pure and safe to call
from concurrent workers.
"""

import logging
from typing import Optional

import numpy as np
from scipy import linalg, sparse
from scipy.sparse.linalg import expm_multiply

from config.settings import KRYLOV_TOL, SPECTRAL_THRESHOLD
from generator.generator import Generator
from mmspace.errors import ConfigError, NumericalError
from observability.obs import inc, timer

logger = logging.getLogger("heatperim")

STRATEGIES = ("auto", "spectral", "krylov")


class HeatOperator:
    """
    Semigroup engine for one generator.

    Args:
        gen: The generator
        strategy: "auto" (spectral when n <= threshold), "spectral" or "krylov"
        tol: Relative accuracy target; also the threshold below which negative
            outputs of nonnegative inputs are reported
        threshold: Largest n handled spectrally under "auto"
    """

    def __init__(
        self,
        gen: Generator,
        strategy: str = "auto",
        tol: float = KRYLOV_TOL,
        threshold: int = SPECTRAL_THRESHOLD,
    ) -> None:
        if strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
        if strategy == "auto":
            strategy = "spectral" if gen.n <= threshold else "krylov"
        self.gen = gen
        self.strategy = strategy
        self.tol = float(tol)
        self._eigvals: Optional[np.ndarray] = None
        self._eigvecs: Optional[np.ndarray] = None
        self._sqrt_mu = np.sqrt(gen.mu)

        if strategy == "spectral":
            self._factorize()
        logger.info(f"[HEAT] {gen.space.label or 'space'}: {strategy} strategy, n={gen.n}")

    def _factorize(self) -> None:
        with timer("spectral_factorization"):
            s = self._sqrt_mu
            S = (sparse.diags(s) @ self.gen.A @ sparse.diags(1.0 / s)).toarray()
            S = 0.5 * (S + S.T)
            try:
                vals, vecs = linalg.eigh(S)
            except linalg.LinAlgError as exc:
                raise NumericalError(f"eigendecomposition failed: {exc}") from exc
        vals.setflags(write=False)
        vecs.setflags(write=False)
        self._eigvals = vals
        self._eigvecs = vecs
        inc("eigendecompositions")

    @property
    def eigenvalues(self) -> np.ndarray:
        """Spectrum of A, ascending (nonpositive up to rounding)."""
        if self._eigvals is None:
            raise ConfigError("eigenvalues are only available for the spectral strategy")
        return self._eigvals

    # -------------------------------------------------------
    # SEMIGROUP ACTION
    # -------------------------------------------------------
    def apply(self, f: np.ndarray, t: float) -> np.ndarray:
        """
        T_t f for a vector, or column-wise for an (n, k) matrix.

        Raises:
            ValueError: t < 0 or non-finite f
            NumericalError: non-finite output
        """
        if t < 0:
            raise ValueError(f"time must be nonnegative, got {t}")
        f = np.array(f, dtype=float)
        if f.shape[0] != self.gen.n:
            raise ValueError(f"vector length {f.shape[0]} does not match n={self.gen.n}")
        if not np.all(np.isfinite(f)):
            raise ValueError("f must be finite-valued")
        if t == 0:
            return f

        inc("semigroup_applications")
        if self.strategy == "spectral":
            out = self._apply_spectral(f, t)
        else:
            out = expm_multiply(self.gen.A * t, f)

        if not np.all(np.isfinite(out)):
            ones = np.ones(self.gen.n)
            residual = float(np.abs(expm_multiply(self.gen.A * t, ones) - ones).max())
            raise NumericalError(f"semigroup output not finite at t={t:g} (conservation residual {residual:.3g})")

        self._report_negative(f, out)
        return out

    def _apply_spectral(self, f: np.ndarray, t: float) -> np.ndarray:
        s = self._sqrt_mu
        V = self._eigvecs
        scaled = f * (s if f.ndim == 1 else s[:, None])
        coeff = V.T @ scaled
        decay = np.exp(t * self._eigvals)
        coeff = coeff * (decay if f.ndim == 1 else decay[:, None])
        out = V @ coeff
        return out / (s if f.ndim == 1 else s[:, None])

    def _report_negative(self, f: np.ndarray, out: np.ndarray) -> None:
        # only meaningful for nonnegative data, where T_t f >= 0 exactly
        if np.any(f < 0):
            return
        floor = -self.tol * max(float(np.abs(f).max(initial=0.0)), 1.0)
        bad = int(np.count_nonzero(out < floor))
        if bad:
            inc("negative_kernel_entries", bad)
            logger.warning(f"[HEAT] {bad} entries below {floor:.3g}; min {out.min():.3g} (kept as computed)")

    # -------------------------------------------------------
    # KERNEL
    # -------------------------------------------------------
    def heat_kernel_row(self, t: float, x: int) -> np.ndarray:
        """p(t, x, .), the density of T_t against mu: T_t f(x) = sum_y p(t,x,y) f(y) mu(y)."""
        if t <= 0:
            raise ValueError(f"heat kernel needs t > 0, got {t}")
        self.gen.space._check_index(x)
        delta = np.zeros(self.gen.n)
        delta[x] = 1.0 / self.gen.mu[x]
        return self.apply(delta, t)


def apply_semigroup(op: HeatOperator, f: np.ndarray, t: float) -> np.ndarray:
    return op.apply(f, t)


def heat_kernel_row(op: HeatOperator, t: float, x: int) -> np.ndarray:
    return op.heat_kernel_row(t, x)


def semigroup_variance(op: HeatOperator, f: np.ndarray, t: float) -> np.ndarray:
    """T_t(f^2) - (T_t f)^2, nonnegative up to rounding."""
    f = np.asarray(f, dtype=float)
    both = op.apply(np.column_stack([f ** 2, f]), t)
    return both[:, 0] - both[:, 1] ** 2
