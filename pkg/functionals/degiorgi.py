# functionals/degiorgi.py
"""De Giorgi functional: Gamma total variation of the heat-regularised function."""

import numpy as np

from bv.variation import gamma_tv
from generator.heat import HeatOperator


def de_giorgi(op: HeatOperator, u: np.ndarray, t: float) -> float:
    """sum_i mu(i) sqrt(Gamma(T_t u)(i))."""
    if t <= 0:
        raise ValueError(f"time must be positive, got {t}")
    return gamma_tv(op.gen, op.apply(u, t))
