# functionals/ledoux.py
"""
Ledoux-type heat content functionals and the L1 heat identity.

For a set E and chi = chi_E:

    ledoux_local(E, t)  = (1/sqrt t) sum_{x in E^{sqrt t} - E} mu(x) T_t chi(x)
    ledoux_global(E, t) = sqrt(pi/t) sum_{x not in E} mu(x) T_t chi(x)

On the calibrated circle each boundary point contributes 1 to the global
functional and kappa = int_0^1 erfc(s/2)/2 ds to the local one.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from functionals.energies import near_diagonal_energy
from generator.heat import HeatOperator
from mmspace.geometry import tubular_neighborhood
from mmspace.space import indicator

logger = logging.getLogger("heatperim")


@dataclass(frozen=True)
class L1HeatReport:
    lhs: float
    rhs: float
    residual: float


def _heat_outside(op: HeatOperator, subset: Sequence[int], t: float):
    if t <= 0:
        raise ValueError(f"time must be positive, got {t}")
    chi = indicator(op.gen.space, subset)
    return chi, op.apply(chi, t)


def ledoux_local(op: HeatOperator, subset: Sequence[int], t: float, radius_factor: float = 1.0) -> float:
    """
    Heat escaping into the sqrt(t)-tube around E, normalised by sqrt(t).

    Args:
        radius_factor: Tube radius in units of sqrt(t) (1 for E^{sqrt t})
    """
    space = op.gen.space
    chi, heat = _heat_outside(op, subset, t)
    if not chi.any() or chi.all():
        return 0.0
    tube = tubular_neighborhood(space, np.flatnonzero(chi), radius_factor * np.sqrt(t))
    ring = tube[chi[tube] == 0]
    return float(np.dot(space.mu[ring], heat[ring])) / np.sqrt(t)


def ledoux_global(op: HeatOperator, subset: Sequence[int], t: float) -> float:
    """sqrt(pi/t) times the heat found outside E at time t."""
    space = op.gen.space
    chi, heat = _heat_outside(op, subset, t)
    outside = chi == 0
    return float(np.sqrt(np.pi / t) * np.dot(space.mu[outside], heat[outside]))


def l1_heat_identity(op: HeatOperator, subset: Sequence[int], t: float) -> L1HeatReport:
    """||T_t chi - chi||_1 against twice the heat outside E; equal up to rounding."""
    space = op.gen.space
    chi, heat = _heat_outside(op, subset, t)
    lhs = float(np.dot(space.mu, np.abs(heat - chi)))
    rhs = 2.0 * float(np.dot(space.mu[chi == 0], heat[chi == 0]))
    return L1HeatReport(lhs=lhs, rhs=rhs, residual=abs(lhs - rhs))


def ledoux_energy_band(op: HeatOperator, subset: Sequence[int], times: Sequence[float]) -> Tuple[float, float]:
    """
    (min, max) of ledoux_local(E, t) / near_diagonal_energy(chi_E, sqrt t)
    over the given times; nan ratios from empty strips are ignored.
    """
    space = op.gen.space
    chi = indicator(space, subset)
    ratios = []
    for t in times:
        energy = near_diagonal_energy(space, chi, np.sqrt(t))
        if energy > 0:
            ratios.append(ledoux_local(op, subset, t) / energy)
    if not ratios:
        return float("nan"), float("nan")
    logger.info(f"[LEDOUX] local/energy ratio in [{min(ratios):.4g}, {max(ratios):.4g}] over {len(ratios)} time(s)")
    return float(min(ratios)), float(max(ratios))
