# harness/stages.py
"""
Ladder stages of an experiment: one entry per functional name a config may
use, mapping the resolved input to a FunctionalLadder.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import numpy as np

from functionals.degiorgi import de_giorgi
from functionals.energies import mazya_energy, near_diagonal_energy
from functionals.ladder import FunctionalLadder, PlateauDetector, WindowPolicy, ladder_scan
from functionals.ledoux import ledoux_global, ledoux_local
from generator.generator import Generator
from generator.heat import HeatOperator
from harness.config import FUNCTIONAL_PARAMS, FunctionalSpec, InputSpec
from harness.sets import build_function, build_set, shrinking_balls_union
from mmspace.errors import ConfigError
from mmspace.geometry import minkowski_content, vertex_boundary
from mmspace.space import MetricMeasureSpace, indicator
from smoothing.smoothing import averaged_difference_density

logger = logging.getLogger("heatperim")


@dataclass(frozen=True)
class StageContext:
    space: MetricMeasureSpace
    gen: Optional[Generator] = None
    op: Optional[HeatOperator] = None
    workers: int = 1
    seed: int = 0
    plateau: float = 0.02  # largest relative change inside a plateau


@dataclass(frozen=True)
class ResolvedInput:
    u: np.ndarray
    subset: Optional[np.ndarray] = None
    boundary: Optional[np.ndarray] = None


@dataclass(frozen=True)
class StageOutput:
    label: str
    ladder: FunctionalLadder
    input: ResolvedInput


# builders drawing random numbers; the experiment seed fills in a missing "seed"
SEEDED = frozenset({"random", "randomInteger", "pointCloud"})


def with_seed(name: str, params: Dict, seed: int) -> Dict:
    params = dict(params)
    if name in SEEDED:
        params.setdefault("seed", seed)
    return params


def resolve_input(space: MetricMeasureSpace, spec: InputSpec, seed: int = 0) -> ResolvedInput:
    params = with_seed(spec.name, spec.params, seed)
    if spec.kind == "function":
        return ResolvedInput(u=build_function(space, spec.name, params))
    if spec.name == "shrinkingBallsUnion":
        union = shrinking_balls_union(space, params.get("k"))
        return ResolvedInput(u=indicator(space, union.members), subset=union.members, boundary=union.boundary)
    subset = build_set(space, spec.name, params)
    return ResolvedInput(u=indicator(space, subset), subset=subset)


def _needs_set(inp: ResolvedInput, name: str) -> np.ndarray:
    if inp.subset is None:
        raise ConfigError(f"{name} needs a set input, got a function")
    return inp.subset


def _needs_heat(ctx: StageContext, name: str) -> HeatOperator:
    if ctx.op is None:
        raise ConfigError(f"{name} needs the heat operator, which was not built")
    return ctx.op


# -------------------------------------------------------
# EVALUATORS
# -------------------------------------------------------
Evaluator = Callable[[StageContext, ResolvedInput, Dict], Callable[[float], float]]


def _near_diagonal(ctx, inp, params):
    return lambda eps: near_diagonal_energy(ctx.space, inp.u, eps)


def _mazya(ctx, inp, params):
    # ladder parameter is a - 1
    return lambda eps: mazya_energy(ctx.space, inp.u, 1.0 + eps)


def _averaged_difference(ctx, inp, params):
    return lambda eps: averaged_difference_density(ctx.space, inp.u, eps).total


def _ledoux_local(ctx, inp, params):
    op, subset = _needs_heat(ctx, "ledouxLocal"), _needs_set(inp, "ledouxLocal")
    factor = float(params.get("radiusFactor", 1.0))
    return lambda t: ledoux_local(op, subset, t, radius_factor=factor)


def _ledoux_global(ctx, inp, params):
    op, subset = _needs_heat(ctx, "ledouxGlobal"), _needs_set(inp, "ledouxGlobal")
    return lambda t: ledoux_global(op, subset, t)


def _de_giorgi(ctx, inp, params):
    op = _needs_heat(ctx, "deGiorgi")
    return lambda t: de_giorgi(op, inp.u, t)


EVALUATORS: Dict[str, Evaluator] = {
    "nearDiagonalEnergy": _near_diagonal,
    "mazyaEnergy": _mazya,
    "averagedDifference": _averaged_difference,
    "ledouxLocal": _ledoux_local,
    "ledouxGlobal": _ledoux_global,
    "deGiorgi": _de_giorgi,
}


def default_window(name: str) -> WindowPolicy:
    return WindowPolicy.time() if FUNCTIONAL_PARAMS[name] == "t" else WindowPolicy.length()


def run_functional(ctx: StageContext, spec: FunctionalSpec) -> StageOutput:
    """
    Resolve the input and ladder of one functional and evaluate it.

    Raises:
        ConfigError: unusable input or ladder for this functional
    """
    space = ctx.space
    inp = resolve_input(space, spec.input, ctx.seed)
    params = spec.ladder.resolve(space.resolution)
    logger.info(f"[RUN] {spec.label}: {spec.name} over {params.size} sample(s)")

    if spec.name == "minkowskiContent":
        boundary = inp.boundary
        if boundary is None:
            boundary = vertex_boundary(space, _needs_set(inp, spec.name))
            inp = ResolvedInput(u=inp.u, subset=inp.subset, boundary=boundary)
        ladder = minkowski_content(space, boundary, params, name=spec.label)
        return StageOutput(spec.label, ladder, inp)

    functional = EVALUATORS[spec.name](ctx, inp, spec.params)
    ladder = ladder_scan(
        functional, params, spec.window or default_window(spec.name), space.resolution,
        name=spec.label, space=space.label, workers=ctx.workers,
        detector=PlateauDetector(threshold=ctx.plateau),
    )
    return StageOutput(spec.label, ladder, inp)
