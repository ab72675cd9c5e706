# harness/experiment.py
"""
Config-driven experiment runner.

Stages run in order: build the space, build the generator, build the heat
operator (only when a time ladder needs it), then every functional ladder.
Ladders fan out over the worker budget. A failing stage is logged, recorded
in the manifest with its name, and the remaining stages carry on; whatever
was computed is written to the run directory before the manifest.
"""

import logging
import os
import platform
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Callable, Dict, List, Optional, Tuple, TypeVar

import matplotlib
import networkx
import numpy as np
import pandas as pd
import scipy

from config.settings import ARTIFACT_VERSION, DEFAULT_WORKERS, RESULTS_DIR
from functionals.parallel import ParallelLadderEngine
from generator.generator import build_generator
from generator.heat import HeatOperator
from harness.builders import build_space
from harness.config import FUNCTIONAL_PARAMS, ExperimentConfig, FunctionalSpec
from harness.persist import (
    ensure_output_dir,
    safe_stem,
    write_dat,
    write_ladders_csv,
    write_manifest,
    write_vectors,
)
from harness.plots import emit_plot
from harness.stages import StageContext, StageOutput, run_functional, with_seed
from mmspace.errors import AcceptanceError
from observability.obs import get_metrics, inc, record_latency, reset_metrics, timer

logger = logging.getLogger("heatperim")

T = TypeVar("T")


@dataclass
class ResultManifest:
    name: str
    config_hash: str
    artifact_version: str
    output_dir: str
    created: str
    environment: Dict[str, str]
    tolerances: Dict[str, float] = field(default_factory=dict)
    wall_clock: Dict[str, float] = field(default_factory=dict)
    results: List[Dict[str, Any]] = field(default_factory=list)
    failures: List[Dict[str, str]] = field(default_factory=list)
    acceptance: List[Dict[str, Any]] = field(default_factory=list)
    files: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "configHash": self.config_hash,
            "artifactVersion": self.artifact_version,
            "outputDir": self.output_dir,
            "created": self.created,
            "environment": dict(self.environment),
            "tolerances": dict(self.tolerances),
            "wallClock": dict(self.wall_clock),
            "results": list(self.results),
            "failures": list(self.failures),
            "acceptance": list(self.acceptance),
            "files": list(self.files),
        }


def environment_fingerprint() -> Dict[str, str]:
    return {
        "python": platform.python_version(),
        "platform": platform.platform(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pandas": pd.__version__,
        "networkx": networkx.__version__,
        "matplotlib": matplotlib.__version__,
    }


def _guarded(stage: str, fn: Callable[[], T]) -> Tuple[Optional[T], Optional[Dict[str, str]]]:
    """Run one stage; a failure comes back as {"stage", "kind", "error"}."""
    try:
        with timer(f"stage_{stage}"):
            return fn(), None
    except Exception as exc:
        logger.exception(f"[RUN] stage {stage} failed")
        inc("failed_stages")
        return None, {"stage": stage, "kind": type(exc).__name__, "error": str(exc)}


def run_experiment(
    config: ExperimentConfig,
    output_dir: Optional[str] = None,
    workers: Optional[int] = None,
    assert_expectations: bool = False,
) -> ResultManifest:
    """
    Execute every ladder of a config and persist the results.

    Args:
        config: Parsed experiment config
        output_dir: Run directory (default: config output, else RESULTS_DIR/name)
        workers: Ladder fan-out budget (default: HEATPERIM_WORKERS)
        assert_expectations: Raise AcceptanceError when an expected limit is missed

    Returns:
        ResultManifest, also written to <output_dir>/manifest.json

    Raises:
        AcceptanceError: only with assert_expectations, after everything is written
    """
    reset_metrics()
    workers = workers or DEFAULT_WORKERS
    out = ensure_output_dir(output_dir or config.output or str(RESULTS_DIR / config.name))
    manifest = ResultManifest(
        name=config.name,
        config_hash=config.config_hash,
        artifact_version=ARTIFACT_VERSION,
        output_dir=out,
        created=datetime.now(timezone.utc).isoformat(timespec="seconds"),
        environment=environment_fingerprint(),
        tolerances=dict(config.tolerances),
    )
    logger.info(f"[RUN] {config.name} ({config.config_hash[:12]}): {len(config.functionals)} functional(s) -> {out}")

    # ----------------------------------------------------
    # 1. SPACE, GENERATOR, HEAT OPERATOR
    # ----------------------------------------------------
    space_params = with_seed(config.space.builder, config.space.params, config.seed)
    space, failure = _guarded("build_space", lambda: build_space(config.space.builder, space_params))
    if failure:
        manifest.failures.append(failure)

    gen = None
    if space is not None:
        g = config.generator
        gen, failure = _guarded("build_generator", lambda: build_generator(space, g.rule, g.h, g.k, g.kernel))
        if failure:
            manifest.failures.append(failure)

    op = None
    if gen is not None and any(FUNCTIONAL_PARAMS[f.name] == "t" for f in config.functionals):
        op, failure = _guarded("heat_operator", lambda: HeatOperator(gen, strategy=config.strategy))
        if failure:
            manifest.failures.append(failure)

    # ----------------------------------------------------
    # 2. LADDERS
    # ----------------------------------------------------
    outputs: List[StageOutput] = []
    if space is not None and config.functionals:
        ctx = StageContext(
            space=space, gen=gen, op=op, workers=1, seed=config.seed, plateau=config.tolerances["plateau"],
        )

        def stage(spec: FunctionalSpec) -> Tuple[Optional[StageOutput], Optional[Dict[str, str]]]:
            return _guarded(f"ladder:{spec.label}", lambda: run_functional(ctx, spec))

        engine = ParallelLadderEngine(workers)
        for output, failure in engine.run(stage, list(config.functionals), tag="experiment"):
            if failure:
                manifest.failures.append(failure)
            if output is not None:
                outputs.append(output)
    elif space is None:
        for spec in config.functionals:
            manifest.failures.append({"stage": f"ladder:{spec.label}", "kind": "Skipped", "error": "space was not built"})

    # ----------------------------------------------------
    # 3. PERSIST
    # ----------------------------------------------------
    ladders = [o.ladder for o in outputs]
    manifest.files.append(write_ladders_csv(ladders, os.path.join(out, "ladders.csv")))
    for o in outputs:
        stem = safe_stem(o.label)
        manifest.files.append(write_dat(o.ladder, os.path.join(out, f"{stem}.dat")))
        path = os.path.join(out, f"{stem}.svg")
        emit_plot(o.ladder, path=path)
        manifest.files.append(os.path.abspath(path))
        manifest.results.append(o.ladder.to_dict())

    records: List[Dict[str, Any]] = []
    for o in outputs:
        records.append({"functional": o.label, "vector": "input", "values": o.input.u})
        if o.input.boundary is not None:
            records.append({"functional": o.label, "vector": "boundary", "values": o.input.boundary})
    manifest.files.append(write_vectors(records, os.path.join(out, "vectors.jsonl")))

    # ----------------------------------------------------
    # 4. ACCEPTANCE + MANIFEST
    # ----------------------------------------------------
    by_label = {o.label: o.ladder for o in outputs}
    for spec in config.functionals:
        if spec.expect is None:
            continue
        ladder = by_label.get(spec.label)
        limit = None if ladder is None or not np.isfinite(ladder.limit_est) else float(ladder.limit_est)
        manifest.acceptance.append({
            "functional": spec.label,
            "expected": spec.expect.limit,
            "rtol": spec.expect.rtol,
            "limitEst": limit,
            "passed": spec.expect.holds(limit),
        })

    metrics = get_metrics()
    manifest.wall_clock = {k: float(v) for k, v in sorted(metrics["timings"].items())}
    record_latency("run_total", sum(v for k, v in manifest.wall_clock.items() if k.startswith("stage_")))
    manifest_path = os.path.join(out, "manifest.json")
    manifest.files.append(os.path.abspath(manifest_path))
    write_manifest(manifest.to_dict(), manifest_path)
    logger.info(f"[RUN] {config.name}: {len(outputs)} ladder(s), {len(manifest.failures)} failure(s)")

    missed = [a["functional"] for a in manifest.acceptance if not a["passed"]]
    if assert_expectations and missed:
        raise AcceptanceError(f"expected limits missed for {missed}; see {manifest_path}")
    return manifest
