# mmspace/diagnostics.py
"""
Sampled doubling and 1-Poincare diagnostics.

Both constants are estimated from probes, never certified. Probe sets are
generated from a seed so every report is reproducible.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from mmspace.errors import NumericalError
from mmspace.space import MetricMeasureSpace, ball

logger = logging.getLogger("heatperim")

Probe = Tuple[int, float]


# -------------------------------------------------------
# REPORTS
# -------------------------------------------------------
@dataclass(frozen=True)
class DoublingReport:
    cD: float
    qMu: float
    radii_sampled: Tuple[Probe, ...]
    seed: Optional[int] = None


@dataclass(frozen=True)
class PoincareReport:
    cP: float
    lam: float
    test_functions: int
    admissible: int
    seed: Optional[int] = None


# -------------------------------------------------------
# PROBE GENERATION
# -------------------------------------------------------
def random_balls(space: MetricMeasureSpace, count: int, r_min: float, r_max: float, seed: int = 0) -> List[Probe]:
    """Uniform random centres with log-uniform radii in [r_min, r_max]."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if not 0 < r_min <= r_max:
        raise ValueError(f"need 0 < r_min <= r_max, got {r_min}, {r_max}")
    rng = np.random.default_rng(seed)
    centers = rng.integers(0, space.n, size=count)
    radii = np.exp(rng.uniform(np.log(r_min), np.log(r_max), size=count))
    return [(int(x), float(r)) for x, r in zip(centers, radii)]


@dataclass
class PoincareProbes:
    functions: List[np.ndarray]
    balls: List[Probe]
    seed: Optional[int] = None
    labels: List[str] = field(default_factory=list)


def random_poincare_probes(
    space: MetricMeasureSpace,
    n_functions: int = 6,
    n_balls: int = 32,
    r_min: Optional[float] = None,
    r_max: Optional[float] = None,
    seed: int = 0,
) -> PoincareProbes:
    """
    Random smooth profiles (Gaussian distance bumps) alternated with
    smoothed ball indicators, plus random balls.
    """
    rng = np.random.default_rng(seed)
    diam = max(space.diameter, space.resolution)
    r_min = r_min if r_min is not None else max(4 * space.resolution, diam / 64)
    r_max = r_max if r_max is not None else diam / 4
    r_min = min(r_min, r_max)

    functions, labels = [], []
    for k in range(n_functions):
        center = int(rng.integers(0, space.n))
        scale = float(np.exp(rng.uniform(np.log(r_min), np.log(r_max))))
        d = space.distances_from(center)
        if k % 2 == 0:
            functions.append(np.exp(-(d / scale) ** 2))
            labels.append(f"bump@{center}")
        else:
            functions.append(np.clip((2 * scale - d) / scale, 0.0, 1.0))
            labels.append(f"smoothed-ball@{center}")

    balls = random_balls(space, n_balls, r_min, r_max, seed=seed + 1)
    return PoincareProbes(functions=functions, balls=balls, seed=seed, labels=labels)


# -------------------------------------------------------
# DOUBLING
# -------------------------------------------------------
def doubling_estimate(space: MetricMeasureSpace, probes: Sequence[Probe], seed: Optional[int] = None) -> DoublingReport:
    """
    cD = max over probes of mu(B_2r(x)) / mu(B_r(x)).

    Args:
        probes: (x, r) pairs, for instance from random_balls
        seed: Seed the probes were drawn with, recorded in the report

    Raises:
        ValueError: on an empty probe list
    """
    probes = [(int(x), float(r)) for x, r in probes]
    if not probes:
        raise ValueError("doubling estimate needs at least one probe")

    ratios = []
    for x, r in probes:
        d = space.distances_from(x)
        small = space.mu[d < r].sum()
        large = space.mu[d < 2 * r].sum()
        ratios.append(large / small)

    cD = max(1.0, float(max(ratios)))
    report = DoublingReport(cD=cD, qMu=float(np.log2(cD)), radii_sampled=tuple(probes), seed=seed)
    logger.info(f"[DIAG] doubling over {len(probes)} probe(s): cD={cD:.4g}, qMu={report.qMu:.4g}")
    return report


# -------------------------------------------------------
# POINCARE
# -------------------------------------------------------
def poincare_estimate(
    space: MetricMeasureSpace,
    gradient_oracle: Callable[[np.ndarray], np.ndarray],
    lam: float,
    probes: PoincareProbes,
) -> PoincareReport:
    """
    cP = max over (u, B_r(x)) of
    [avg_{B_r} |u - u_{B_r}|] / [r * avg_{B_{lam r}} lip(u)].

    Ratios with a zero denominator are skipped.

    Args:
        gradient_oracle: u -> pointwise upper gradient, e.g. a local_lip partial
        lam: Dilation factor, >= 1

    Raises:
        ValueError: lam < 1
        NumericalError: when no probe has a nonzero denominator, or every
            admissible ball and function pair has zero oscillation
    """
    if lam < 1:
        raise ValueError(f"lambda must be >= 1, got {lam}")

    best = 0.0
    admissible = 0
    for u in probes.functions:
        u = np.asarray(u, dtype=float)
        grad = np.asarray(gradient_oracle(u), dtype=float)
        for x, r in probes.balls:
            inner = ball(space, x, r)
            w = space.mu[inner]
            avg = float(np.dot(w, u[inner]) / w.sum())
            oscillation = float(np.dot(w, np.abs(u[inner] - avg)) / w.sum())

            outer = ball(space, x, lam * r)
            wo = space.mu[outer]
            denominator = r * float(np.dot(wo, grad[outer]) / wo.sum())
            if denominator <= 0.0:
                continue
            admissible += 1
            best = max(best, oscillation / denominator)

    if admissible == 0:
        raise NumericalError("no admissible probe: every Poincare denominator vanished")
    if best == 0.0:
        raise NumericalError(f"all {admissible} admissible ball and function pair(s) have zero oscillation, cP is not positive")

    logger.info(f"[DIAG] poincare over {admissible} admissible probe(s): cP={best:.4g} (lambda={lam})")
    return PoincareReport(
        cP=best, lam=float(lam), test_functions=len(probes.functions), admissible=admissible, seed=probes.seed
    )
