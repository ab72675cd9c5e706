# smoothing/smoothing.py
"""
Discrete approximation machinery: local Lipschitz constants, the
averaged-difference density and its measure, and the partition-of-unity
convolution u_eps = sum_i u_{B_i} phi_i.

Averages over net balls and the local Lipschitz constant use closed balls;
the averaged-difference density uses the open balls of the strip energies.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from mmspace.covering import EpsilonNet, PartitionOfUnity, epsilon_net, partition_of_unity
from mmspace.space import MetricMeasureSpace, closed_ball
from observability.obs import timer

logger = logging.getLogger("heatperim")

DEFAULT_DILATE = 6.0


@dataclass(frozen=True)
class SmoothedFunction:
    eps: float
    values: np.ndarray
    source_net: EpsilonNet


@dataclass(frozen=True)
class DifferenceDensity:
    eps: float
    density: np.ndarray  # u~_{B_eps}(x)
    measure: np.ndarray  # mu(x) u~_{B_eps}(x)
    total: float
    in_window: bool


@dataclass(frozen=True)
class LipEnergyBound:
    lhs: float
    rhs: float
    ratio: float
    in_window: bool
    defined: bool


@dataclass(frozen=True)
class LocalLipLadder:
    per_rho: Dict[float, np.ndarray]
    minimum: np.ndarray


# -------------------------------------------------------
# LOCAL LIPSCHITZ CONSTANT
# -------------------------------------------------------
def local_lip(space: MetricMeasureSpace, u: np.ndarray, rho: float) -> np.ndarray:
    """max over y in the closed rho-ball, y != x, of |u(x) - u(y)| / d(x, y); 0 when isolated."""
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    u = np.asarray(u, dtype=float)
    out = np.zeros(space.n)
    if space.n == 1:
        return out
    I, J, D = space.neighbor_pairs(rho, closed=True)
    if I.size:
        np.maximum.at(out, I, np.abs(u[I] - u[J]) / D)
    return out


def local_lip_ladder(space: MetricMeasureSpace, u: np.ndarray, rhos: Optional[Sequence[float]] = None) -> LocalLipLadder:
    """Pointwise minimum over rho in {h, 2h, 4h} (h the resolution) by default."""
    if rhos is None:
        h = space.resolution
        rhos = (h, 2 * h, 4 * h)
    per_rho = {float(r): local_lip(space, u, r) for r in rhos}
    minimum = np.min(np.vstack(list(per_rho.values())), axis=0)
    return LocalLipLadder(per_rho=per_rho, minimum=minimum)


# -------------------------------------------------------
# AVERAGED DIFFERENCES
# -------------------------------------------------------
def averaged_difference_density(space: MetricMeasureSpace, u: np.ndarray, eps: float) -> DifferenceDensity:
    """
    u~(x) = (1/mu(B_eps(x))) sum_{y in B_eps(x)} mu(y) |u(x) - u(y)| / eps,
    the measure mu_eps = mu * u~ and its total mass.
    """
    if eps <= 0:
        raise ValueError(f"eps must be positive, got {eps}")
    u = np.asarray(u, dtype=float)
    I, J, _ = space.neighbor_pairs(eps)
    volume = space.ball_measures(eps)
    sums = np.bincount(I, weights=space.mu[J] * np.abs(u[I] - u[J]), minlength=space.n)
    density = sums / (volume * eps)
    measure = space.mu * density
    in_window = bool(I.size) and eps <= space.diameter
    return DifferenceDensity(eps=float(eps), density=density, measure=measure, total=float(measure.sum()), in_window=in_window)


# -------------------------------------------------------
# CONVOLUTION
# -------------------------------------------------------
def ball_averages(space: MetricMeasureSpace, u: np.ndarray, centers: Sequence[int], radius: float) -> np.ndarray:
    """mu-averages of u over closed balls around the centres."""
    u = np.asarray(u, dtype=float)
    out = np.empty(len(centers))
    for k, c in enumerate(centers):
        idx = closed_ball(space, int(c), radius)
        w = space.mu[idx]
        out[k] = float(np.dot(w, u[idx]) / w.sum())
    return out


def discrete_convolution(space: MetricMeasureSpace, u: np.ndarray, net: EpsilonNet, pou: PartitionOfUnity) -> SmoothedFunction:
    """u_eps(x) = sum_i u_{B_eps(x_i)} phi_i(x); a convex combination of ball averages."""
    averages = ball_averages(space, u, net.centers, net.eps)
    values = np.asarray(pou.phi.T @ averages).ravel()
    # convex combinations stay inside [min u, max u]; clip the rounding
    u = np.asarray(u, dtype=float)
    values = np.clip(values, u.min(), u.max())
    return SmoothedFunction(eps=net.eps, values=values, source_net=net)


def lip_energy_bound(
    space: MetricMeasureSpace,
    u: np.ndarray,
    net: EpsilonNet,
    pou: PartitionOfUnity,
    dilate: float = DEFAULT_DILATE,
) -> LipEnergyBound:
    """
    lhs = sum mu(x) lip(u_eps)(x) at the grid scale, rhs = mu_{dilate eps}(X).

    The pair is out of window when dilate * eps exceeds the diameter, and
    undefined (ratio nan) when both sides vanish.
    """
    with timer("lip_energy_bound"):
        smoothed = discrete_convolution(space, u, net, pou)
        rho = space.resolution if space.resolution > 0 else net.eps
        lhs = float(np.dot(space.mu, local_lip(space, smoothed.values, rho)))
        density = averaged_difference_density(space, u, dilate * net.eps)
        rhs = density.total

    in_window = dilate * net.eps <= space.diameter
    if not in_window:
        logger.warning(f"[SMOOTH] {dilate:g} * eps = {dilate * net.eps:.3g} exceeds the diameter")
    if rhs == 0.0:
        return LipEnergyBound(lhs=lhs, rhs=rhs, ratio=float("nan"), in_window=in_window, defined=False)
    return LipEnergyBound(lhs=lhs, rhs=rhs, ratio=lhs / rhs, in_window=in_window, defined=True)


def constructive_ratios(
    space: MetricMeasureSpace,
    u: np.ndarray,
    eps_ladder: Sequence[float],
    dilate: float = DEFAULT_DILATE,
) -> List[LipEnergyBound]:
    """
    For each eps: smooth at eps/dilate and compare sum mu lip(u_{eps/dilate})
    with mu_eps(X).
    """
    out = []
    for eps in eps_ladder:
        net = epsilon_net(space, eps / dilate)
        pou = partition_of_unity(space, net)
        out.append(lip_energy_bound(space, u, net, pou, dilate))
    return out
