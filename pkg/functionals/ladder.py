# functionals/ladder.py
"""
Parameter ladders and limit estimation.

Every "limit as the scale goes to zero" in this repository becomes a ladder:
a strictly decreasing list of parameters, one functional value per parameter,
a trusted window that excludes scales close to the grid resolution, and a
plateau detector that decides whether the in-window values have settled.
"""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from functionals.parallel import ParallelLadderEngine
from mmspace.errors import ConfigError
from observability.obs import inc, timer

logger = logging.getLogger("heatperim")

FINITE = "finite"
NO_PLATEAU = "no plateau"
OUT_OF_WINDOW = "out of window"

MIN_IN_WINDOW = 4


# -------------------------------------------------------
# WINDOW POLICY
# -------------------------------------------------------
@dataclass(frozen=True)
class WindowPolicy:
    """
    Trusted-window rule.

    kind "length": param >= factor * resolution (radii, strip widths)
    kind "time":   param >= factor * resolution**2 (heat times)
    """

    kind: str = "length"
    factor: float = 8.0

    @classmethod
    def length(cls, factor: float = 8.0) -> "WindowPolicy":
        return cls("length", factor)

    @classmethod
    def time(cls, factor: float = 10.0) -> "WindowPolicy":
        return cls("time", factor)

    def threshold(self, resolution: float) -> float:
        if self.kind == "length":
            return self.factor * resolution
        if self.kind == "time":
            return self.factor * resolution ** 2
        raise ConfigError(f"unknown window kind {self.kind!r}")


# -------------------------------------------------------
# LADDER RESULT
# -------------------------------------------------------
@dataclass(frozen=True)
class LadderSample:
    param: float
    value: float
    in_window: bool


@dataclass(frozen=True)
class FunctionalLadder:
    """
    Samples sorted by param descending, the trusted window, and the limit
    estimates computed from in-window samples only.
    """

    name: str
    space: str
    samples: Tuple[LadderSample, ...]
    window: Tuple[float, float]
    limit_est: float
    window_min: float
    verdict: str
    plateau: Optional[Tuple[int, int]] = None
    notes: Tuple[str, ...] = ()

    @property
    def params(self) -> np.ndarray:
        return np.array([s.param for s in self.samples])

    @property
    def values(self) -> np.ndarray:
        return np.array([s.value for s in self.samples])

    @property
    def in_window(self) -> np.ndarray:
        return np.array([s.in_window for s in self.samples], dtype=bool)

    def window_values(self) -> np.ndarray:
        return self.values[self.in_window]

    def rows(self) -> List[Dict[str, Any]]:
        """CSV rows: functional,space,param,value,in_window,limit_est,verdict."""
        return [
            {
                "functional": self.name,
                "space": self.space,
                "param": s.param,
                "value": s.value,
                "in_window": bool(s.in_window),
                "limit_est": self.limit_est,
                "verdict": self.verdict,
            }
            for s in self.samples
        ]

    def to_dict(self) -> Dict[str, Any]:
        limit = None if not np.isfinite(self.limit_est) else float(self.limit_est)
        wmin = None if not np.isfinite(self.window_min) else float(self.window_min)
        return {
            "functional": self.name,
            "space": self.space,
            "window": list(self.window),
            "limitEst": limit,
            "windowMin": wmin,
            "verdict": self.verdict,
            "plateau": None if self.plateau is None else list(self.plateau),
            "notes": list(self.notes),
        }


# -------------------------------------------------------
# PLATEAU DETECTION
# -------------------------------------------------------
class PlateauDetector:
    """
    Walks the in-window values from coarse to fine and tracks runs of samples
    whose consecutive relative change stays below a threshold.

    The plateau is the last maximal run holding at least min_run samples.
    """

    def __init__(self, threshold: float = 0.02, min_run: int = 3):
        """
        Args:
            threshold: Maximum relative change between neighbours (default: 0.02)
            min_run: Minimum number of samples in a plateau (default: 3)
        """
        self.threshold = threshold
        self.min_run = min_run

    @staticmethod
    def relative_change(a: float, b: float) -> float:
        scale = max(abs(a), abs(b))
        if scale == 0.0:
            return 0.0
        return abs(b - a) / scale

    def detect(self, values: Sequence[float]) -> Optional[Tuple[int, int]]:
        """
        Args:
            values: In-window values ordered by decreasing parameter

        Returns:
            (start, stop) half-open index range of the plateau, or None
        """
        values = [float(v) for v in values]
        best: Optional[Tuple[int, int]] = None
        start = 0

        for k in range(1, len(values) + 1):
            settled = (
                k < len(values)
                and np.isfinite(values[k])
                and np.isfinite(values[k - 1])
                and self.relative_change(values[k - 1], values[k]) < self.threshold
            )
            if settled:
                continue
            # the run [start, k) just ended
            if k - start >= self.min_run and np.isfinite(values[start]):
                best = (start, k)
            start = k

        if best is None:
            logger.info(f"[LADDER] no run of {self.min_run} samples within {self.threshold:.0%}")
        else:
            logger.info(f"[LADDER] plateau over in-window samples {best[0]}..{best[1] - 1}")
        return best


# -------------------------------------------------------
# LADDER ASSEMBLY
# -------------------------------------------------------
def check_decreasing(params: Sequence[float], what: str = "ladder") -> np.ndarray:
    params = np.asarray(params, dtype=float)
    if params.size == 0:
        raise ConfigError(f"{what} is empty")
    if not np.all(np.isfinite(params)) or np.any(params <= 0):
        raise ConfigError(f"{what} must hold finite positive values")
    if np.any(np.diff(params) >= 0):
        raise ConfigError(f"{what} must be strictly decreasing, got {params.tolist()}")
    return params


def summarize_ladder(
    name: str,
    space: str,
    params: Sequence[float],
    values: Sequence[float],
    threshold: float,
    estimator: str = "plateau",
    detector: Optional[PlateauDetector] = None,
    notes: Sequence[str] = (),
) -> FunctionalLadder:
    """
    Build a FunctionalLadder from already evaluated samples.

    Args:
        threshold: Smallest trusted parameter
        estimator: "plateau" (median of the last plateau) or "min" (minimum
            over the window)
    """
    params = np.asarray(params, dtype=float)
    values = np.asarray(values, dtype=float)
    in_window = params >= threshold
    samples = tuple(
        LadderSample(float(p), float(v), bool(w)) for p, v, w in zip(params, values, in_window)
    )
    window_vals = values[in_window]
    hi = float(params[in_window].max()) if in_window.any() else float("nan")
    window = (float(threshold), hi)
    window_min = float(np.min(window_vals)) if window_vals.size else float("nan")

    if window_vals.size == 0:
        return FunctionalLadder(name, space, samples, window, float("nan"), window_min, OUT_OF_WINDOW, None, tuple(notes))

    if estimator == "min":
        return FunctionalLadder(name, space, samples, window, window_min, window_min, FINITE, None, tuple(notes))
    if estimator != "plateau":
        raise ConfigError(f"unknown estimator {estimator!r}")

    detector = detector or PlateauDetector()
    span = detector.detect(window_vals)
    if span is None:
        return FunctionalLadder(name, space, samples, window, float("nan"), window_min, NO_PLATEAU, None, tuple(notes))

    offset = int(np.flatnonzero(in_window)[0])
    limit = float(np.median(window_vals[span[0]:span[1]]))
    return FunctionalLadder(
        name, space, samples, window, limit, window_min, FINITE,
        (span[0] + offset, span[1] + offset), tuple(notes),
    )


def ladder_scan(
    functional: Callable[[float], float],
    params: Sequence[float],
    window: WindowPolicy,
    resolution: float,
    *,
    name: str = "functional",
    space: str = "",
    workers: int = 1,
    detector: Optional[PlateauDetector] = None,
    min_in_window: int = MIN_IN_WINDOW,
) -> FunctionalLadder:
    """
    Evaluate a functional along a strictly decreasing parameter ladder and
    estimate its small-scale limit.

    Args:
        functional: Pure callable param -> value
        params: Strictly decreasing positive parameters
        window: Trusted-window policy
        resolution: Grid resolution of the underlying space
        workers: Concurrent evaluations

    Returns:
        FunctionalLadder with the plateau median as limit estimate

    Raises:
        ConfigError: when the ladder is not strictly decreasing or holds
            fewer than min_in_window trusted samples
    """
    params = check_decreasing(params)
    threshold = window.threshold(resolution)
    trusted = int(np.count_nonzero(params >= threshold))
    if trusted < min_in_window:
        raise ConfigError(
            f"{name}: {trusted} in-window sample(s) (param >= {threshold:.3g}), need {min_in_window}"
        )

    logger.info(f"[LADDER] {name} on {space or 'space'}: {params.size} samples, {trusted} in window")
    engine = ParallelLadderEngine(workers)
    with timer(f"ladder_{name}"):
        values = engine.run(lambda p: float(functional(float(p))), list(params), tag=name)
    inc("ladder_samples", len(values))

    ladder = summarize_ladder(name, space, params, values, threshold, "plateau", detector)
    logger.info(f"[LADDER] {name}: limit={ladder.limit_est:.6g} verdict={ladder.verdict}")
    return ladder
