# generator/kernel_bounds.py
"""
Two-sided Gaussian bounds for the heat kernel.

With V(x) = mu(B_sqrt(t)(x)) and q = p(t,x,y) * sqrt(V(x) V(y)), the fitted
constants make

    q <= C * exp(-d^2 / (C2 t))            (upper)
    q >= exp(-d^2 / (C1 t)) / C_lower      (lower)

hold on every sample. The prefactors are fixed first from near-diagonal
samples, the exponents second.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
from scipy import stats

from generator.heat import HeatOperator
from mmspace.errors import NumericalError
from mmspace.space import ball_measure

logger = logging.getLogger("heatperim")

Sample = Tuple[float, int, int]

# decay regime used for the log-linear goodness-of-fit
DECAY_REGIME = (1.0, 10.0)
# near-diagonal samples fixing the lower prefactor
NEAR_DIAGONAL = 0.25


@dataclass(frozen=True)
class GaussianFit:
    C: float
    C1: float
    C2: float
    C_lower: float
    r2: float
    slope: float
    samples: int
    decay_samples: int
    upper_holds: bool
    lower_holds: bool


def gaussian_samples(
    op: HeatOperator,
    times: Sequence[float],
    sources: Sequence[int],
    max_ratio: float = 12.0,
    stride: int = 1,
) -> List[Sample]:
    """(t, x, y) triples with d(x, y)^2 / t <= max_ratio, every stride-th y."""
    space = op.gen.space
    out: List[Sample] = []
    for t in times:
        for x in sources:
            d = space.distances_from(int(x))
            ys = np.flatnonzero(d ** 2 / t <= max_ratio)[::stride]
            out.extend((float(t), int(x), int(y)) for y in ys)
    return out


def fit_gaussian_bounds(op: HeatOperator, samples: Iterable[Sample], slack: float = 1e-3) -> GaussianFit:
    """
    Fit (C, C1, C2) on the given samples.

    Args:
        op: Heat operator
        samples: (t, x, y) triples with t > 0
        slack: Relative margin added to every fitted constant

    Returns:
        GaussianFit; both bounds are re-verified on all samples

    Raises:
        ValueError: nonpositive kernel values, or fewer than 3 samples in the
            decay regime 1 <= d^2/t <= 10
    """
    space = op.gen.space
    samples = [(float(t), int(x), int(y)) for t, x, y in samples]
    if not samples:
        raise ValueError("no samples given")

    window = 10.0 * space.resolution ** 2
    if min(t for t, _, _ in samples) < window:
        logger.warning(f"[KERNEL] some sample times are below the trusted window t >= {window:.3g}")

    rows: Dict[Tuple[float, int], np.ndarray] = {}
    volumes: Dict[Tuple[float, int], float] = {}

    def volume(t: float, x: int) -> float:
        key = (t, x)
        if key not in volumes:
            volumes[key] = ball_measure(space, x, np.sqrt(t))
        return volumes[key]

    q, ratio = [], []
    for t, x, y in samples:
        if (t, x) not in rows:
            rows[(t, x)] = op.heat_kernel_row(t, x)
        p = rows[(t, x)][y]
        if p <= 0:
            raise ValueError(f"kernel value p({t:g},{x},{y}) = {p:.3g} is not positive")
        q.append(p * np.sqrt(volume(t, x) * volume(t, y)))
        d = float(space.pair_distances(np.array([x]), np.array([y]))[0])
        ratio.append(d ** 2 / t)
    q = np.array(q)
    ratio = np.array(ratio)

    # upper bound
    C = (1.0 + slack) * float(q.max())
    off = ratio > 0
    if off.any():
        C2 = (1.0 + slack) * float(np.max(ratio[off] / np.log(C / q[off])))
    else:
        C2 = 1.0

    # lower bound
    near = ratio < NEAR_DIAGONAL
    if not near.any():
        near = ratio == ratio.min()
    C_lower = (1.0 + slack) * float(np.max(1.0 / q[near]))
    below = q * C_lower < 1.0
    if below.any():
        C1 = float(np.min(ratio[below] / -np.log(q[below] * C_lower))) / (1.0 + slack)
    else:
        C1 = C2

    lo, hi = DECAY_REGIME
    decay = (ratio >= lo) & (ratio <= hi)
    if np.count_nonzero(decay) < 3:
        raise ValueError(
            f"only {np.count_nonzero(decay)} sample(s) in the decay regime {lo} <= d^2/t <= {hi}"
        )
    reg = stats.linregress(ratio[decay], np.log(q[decay]))

    upper = q <= C * np.exp(-ratio / C2) * (1.0 + 1e-12)
    lower = q * C_lower >= np.exp(-ratio / C1) * (1.0 - 1e-12)
    if not (upper.all() and lower.all()):
        raise NumericalError("fitted Gaussian bounds do not hold on every sample")

    fit = GaussianFit(
        C=C, C1=C1, C2=C2, C_lower=C_lower,
        r2=float(reg.rvalue ** 2), slope=float(reg.slope),
        samples=len(samples), decay_samples=int(np.count_nonzero(decay)),
        upper_holds=bool(upper.all()), lower_holds=bool(lower.all()),
    )
    logger.info(f"[KERNEL] C={C:.4g} C1={C1:.4g} C2={C2:.4g} r2={fit.r2:.4f} over {len(samples)} sample(s)")
    return fit
