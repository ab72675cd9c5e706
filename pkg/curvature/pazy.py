# curvature/pazy.py
"""
Pazy convolution beta_eps f = (1/eps) int rho(s/eps) T_s f ds.

The bump rho(s) ~ exp(-1/(s(1-s))) on (0, 1) is discretised by the midpoint
rule, so beta_eps f = sum_q w_q T_{s_q eps} f with nonnegative weights summing
to one. Every term commutes with A, hence so does beta_eps.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from generator.heat import HeatOperator


@dataclass(frozen=True)
class PazyKernel:
    nodes: np.ndarray  # s_q in (0, 1)
    rho: np.ndarray  # density values, sum rho * spacing = 1
    spacing: float

    @property
    def weights(self) -> np.ndarray:
        return self.rho * self.spacing


def pazy_kernel(count: int = 32) -> PazyKernel:
    if count < 1:
        raise ValueError(f"need at least one node, got {count}")
    spacing = 1.0 / count
    nodes = (np.arange(count) + 0.5) * spacing
    rho = np.exp(-1.0 / (nodes * (1.0 - nodes)))
    rho = rho / (rho.sum() * spacing)
    return PazyKernel(nodes=nodes, rho=rho, spacing=spacing)


def pazy_convolution(
    op: HeatOperator,
    f: np.ndarray,
    eps: float,
    kernel: Optional[PazyKernel] = None,
    max_time: Optional[float] = None,
) -> np.ndarray:
    """
    beta_eps f by quadrature.

    Raises:
        ValueError: eps <= 0, or nodes reaching past max_time
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    kernel = kernel or pazy_kernel()
    times = kernel.nodes * eps
    if max_time is not None and times.max() > max_time:
        raise ValueError(f"quadrature time {times.max():.3g} exceeds the semigroup window {max_time:.3g}")

    f = np.asarray(f, dtype=float)
    out = np.zeros_like(f)
    for w, s in zip(kernel.weights, times):
        out += w * op.apply(f, float(s))
    return out


def pazy_commutation_residual(op: HeatOperator, f: np.ndarray, eps: float, kernel: Optional[PazyKernel] = None) -> float:
    """||A beta f - beta A f||_inf relative to max(||A beta f||_inf, 1)."""
    gen = op.gen
    f = np.asarray(f, dtype=float)
    left = gen.apply(pazy_convolution(op, f, eps, kernel))
    right = pazy_convolution(op, gen.apply(f), eps, kernel)
    scale = max(float(np.abs(left).max()), float(np.abs(right).max()), 1.0)
    return float(np.abs(left - right).max()) / scale
