# harness/config.py
"""
Experiment configuration.

A config is a single JSON document:

    {
      "name": "theorem31_circle",
      "space": {"builder": "circle", "params": {"n": 4096}},
      "generator": {"rule": "radius", "h": null, "k": null, "kernel": "indicator"},
      "heat": {"strategy": "auto"},
      "seed": 0,
      "tolerances": {"verifier": 1e-8, "plateau": 0.02, "limitRtol": 0.03},
      "functionals": [
        {
          "name": "nearDiagonalEnergy",
          "input": {"set": "arc", "params": {"length": 0.5}},
          "ladder": {"kind": "lattice", "lo": 8, "hi": 256, "count": 10, "unit": "resolution"},
          "window": {"kind": "length", "factor": 8},
          "params": {},
          "expect": {"limit": 1.0, "rtol": 0.03}
        }
      ],
      "output": "results/theorem31_circle"
    }

The hash is SHA-256 of the canonical form (sorted keys, no insignificant
whitespace) of the document as given.

"tolerances" may set "verifier" (verifier slack, recorded in the manifest),
"plateau" (largest relative change inside a plateau) and "limitRtol" (the
rtol of every "expect" block that does not give its own).
"""

import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from config.settings import DEFAULT_TOL
from functionals.ladder import WindowPolicy, check_decreasing
from generator.generator import KERNELS, RULES
from generator.heat import STRATEGIES
from harness.builders import BUILDERS
from harness.sets import FUNCTIONS, SETS
from mmspace.errors import ConfigError
from mmspace.geometry import lattice_ladder, time_ladder_from_sqrt

# Ladder functionals a config may name, with the parameter each ladder runs over
FUNCTIONAL_PARAMS: Dict[str, str] = {
    "nearDiagonalEnergy": "eps",
    "mazyaEnergy": "eps",
    "averagedDifference": "eps",
    "ledouxLocal": "t",
    "ledouxGlobal": "t",
    "deGiorgi": "t",
    "minkowskiContent": "r",
}

LADDER_KINDS = ("values", "lattice", "geometric", "sqrtTime", "sqrtLattice")

DEFAULT_TOLERANCES: Dict[str, float] = {"verifier": DEFAULT_TOL, "plateau": 0.02, "limitRtol": 0.03}


def canonical_json(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(doc: Mapping[str, Any]) -> str:
    return hashlib.sha256(canonical_json(doc).encode("utf-8")).hexdigest()


def _require(doc: Mapping[str, Any], key: str, where: str) -> Any:
    if key not in doc:
        raise ConfigError(f"{where}: missing key {key!r}")
    return doc[key]


def _mapping(value: Any, where: str) -> Dict[str, Any]:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be an object, got {type(value).__name__}")
    return dict(value)


# -------------------------------------------------------
# PARTS
# -------------------------------------------------------
@dataclass(frozen=True)
class SpaceSpec:
    builder: str
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class GeneratorSpec:
    rule: str = "radius"
    h: Optional[float] = None
    k: Optional[int] = None
    kernel: str = "indicator"


@dataclass(frozen=True)
class InputSpec:
    """Either an indicator of a named set (kind "set") or a named function."""

    kind: str
    name: str
    params: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class LadderSpec:
    kind: str
    values: Tuple[float, ...] = ()
    lo: float = 0.0
    hi: float = 0.0
    count: int = 0
    offset: float = 0.5
    unit: str = "absolute"

    def resolve(self, resolution: float) -> np.ndarray:
        """
        Concrete strictly decreasing parameters on a space of the given
        resolution. "unit": "resolution" measures lo/hi (or the values) in
        grid steps; the sqrt kinds give lo/hi for sqrt(t).

        Raises:
            ConfigError: the resolved ladder is not strictly decreasing
        """
        scale = resolution if self.unit == "resolution" else 1.0
        if self.kind == "values":
            params = np.asarray(self.values, dtype=float) * scale
        elif self.kind == "lattice":
            params = lattice_ladder(self.lo * scale, self.hi * scale, self.count, resolution, self.offset)
        elif self.kind == "geometric":
            params = np.geomspace(self.hi * scale, self.lo * scale, self.count)
        elif self.kind == "sqrtLattice":
            # sqrt(t) snapped to (m + offset) * resolution
            params = lattice_ladder(self.lo * scale, self.hi * scale, self.count, resolution, self.offset) ** 2
        else:
            params = time_ladder_from_sqrt(self.lo * scale, self.hi * scale, self.count)
        return check_decreasing(params)


@dataclass(frozen=True)
class Expectation:
    limit: float
    rtol: float = 0.03

    def holds(self, value: Optional[float]) -> bool:
        if value is None or not np.isfinite(value):
            return False
        return abs(value - self.limit) <= self.rtol * abs(self.limit)


@dataclass(frozen=True)
class FunctionalSpec:
    name: str
    label: str
    input: InputSpec
    ladder: LadderSpec
    window: Optional[WindowPolicy] = None
    params: Dict[str, Any] = field(default_factory=dict)
    expect: Optional[Expectation] = None


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    space: SpaceSpec
    generator: GeneratorSpec
    strategy: str
    seed: int
    tolerances: Dict[str, float]
    functionals: Tuple[FunctionalSpec, ...]
    output: Optional[str]
    document: Dict[str, Any]

    @property
    def config_hash(self) -> str:
        return config_hash(self.document)


# -------------------------------------------------------
# PARSING
# -------------------------------------------------------
def _parse_space(doc: Mapping[str, Any]) -> SpaceSpec:
    builder = _require(doc, "builder", "space")
    if builder not in BUILDERS:
        raise ConfigError(f"space: unknown builder {builder!r}, choose from {sorted(BUILDERS)}")
    return SpaceSpec(builder=builder, params=_mapping(doc.get("params"), "space.params"))


def _parse_generator(doc: Mapping[str, Any]) -> GeneratorSpec:
    spec = GeneratorSpec(
        rule=doc.get("rule", "radius"),
        h=None if doc.get("h") is None else float(doc["h"]),
        k=None if doc.get("k") is None else int(doc["k"]),
        kernel=doc.get("kernel", "indicator"),
    )
    if spec.rule not in RULES:
        raise ConfigError(f"generator: unknown rule {spec.rule!r}, expected one of {RULES}")
    if spec.kernel not in KERNELS:
        raise ConfigError(f"generator: unknown kernel {spec.kernel!r}, expected one of {KERNELS}")
    if spec.rule == "knn" and spec.k is None:
        raise ConfigError("generator: knn rule needs k")
    return spec


def _parse_input(doc: Mapping[str, Any], where: str) -> InputSpec:
    params = _mapping(doc.get("params"), f"{where}.params")
    if "set" in doc:
        if doc["set"] not in SETS:
            raise ConfigError(f"{where}: unknown set {doc['set']!r}, choose from {sorted(SETS)}")
        return InputSpec("set", doc["set"], params)
    if "function" in doc:
        if doc["function"] not in FUNCTIONS:
            raise ConfigError(f"{where}: unknown function {doc['function']!r}, choose from {sorted(FUNCTIONS)}")
        return InputSpec("function", doc["function"], params)
    raise ConfigError(f"{where}: input needs a 'set' or a 'function'")


def _parse_ladder(doc: Mapping[str, Any], where: str) -> LadderSpec:
    kind = doc.get("kind", "values")
    if kind not in LADDER_KINDS:
        raise ConfigError(f"{where}: unknown ladder kind {kind!r}, expected one of {LADDER_KINDS}")
    unit = doc.get("unit", "absolute")
    if unit not in ("absolute", "resolution"):
        raise ConfigError(f"{where}: unit must be 'absolute' or 'resolution', got {unit!r}")
    if kind == "values":
        values = tuple(float(v) for v in _require(doc, "values", where))
        check_decreasing(values, f"{where} values")
        return LadderSpec(kind=kind, values=values, unit=unit)

    lo, hi, count = float(_require(doc, "lo", where)), float(_require(doc, "hi", where)), int(_require(doc, "count", where))
    if not 0 < lo < hi:
        raise ConfigError(f"{where}: need 0 < lo < hi, got lo={lo}, hi={hi}")
    if count < 2:
        raise ConfigError(f"{where}: count must be >= 2, got {count}")
    return LadderSpec(kind=kind, lo=lo, hi=hi, count=count, offset=float(doc.get("offset", 0.5)), unit=unit)


def _parse_functional(doc: Mapping[str, Any], index: int, default_rtol: float = 0.03) -> FunctionalSpec:
    where = f"functionals[{index}]"
    name = _require(doc, "name", where)
    if name not in FUNCTIONAL_PARAMS:
        raise ConfigError(f"{where}: unknown functional {name!r}, choose from {sorted(FUNCTIONAL_PARAMS)}")

    window = None
    if doc.get("window") is not None:
        w = _mapping(doc["window"], f"{where}.window")
        kind = w.get("kind", "length")
        if kind not in ("length", "time"):
            raise ConfigError(f"{where}.window: kind must be 'length' or 'time', got {kind!r}")
        window = WindowPolicy(kind, float(w.get("factor", 8.0 if kind == "length" else 10.0)))

    expect = None
    if doc.get("expect") is not None:
        e = _mapping(doc["expect"], f"{where}.expect")
        expect = Expectation(limit=float(_require(e, "limit", f"{where}.expect")), rtol=float(e.get("rtol", default_rtol)))

    return FunctionalSpec(
        name=name,
        label=str(doc.get("label", name)),
        input=_parse_input(_mapping(_require(doc, "input", where), f"{where}.input"), f"{where}.input"),
        ladder=_parse_ladder(_mapping(_require(doc, "ladder", where), f"{where}.ladder"), f"{where}.ladder"),
        window=window,
        params=_mapping(doc.get("params"), f"{where}.params"),
        expect=expect,
    )


def _parse_tolerances(doc: Mapping[str, Any]) -> Dict[str, float]:
    unknown = sorted(set(doc) - set(DEFAULT_TOLERANCES))
    if unknown:
        raise ConfigError(f"tolerances: unknown key(s) {unknown}, expected some of {sorted(DEFAULT_TOLERANCES)}")
    merged = dict(DEFAULT_TOLERANCES)
    for key, value in doc.items():
        value = float(value)
        if not np.isfinite(value) or value <= 0:
            raise ConfigError(f"tolerances.{key} must be finite and positive, got {value}")
        merged[key] = value
    return merged


def parse_config(doc: Mapping[str, Any]) -> ExperimentConfig:
    """
    Validate a config document.

    Raises:
        ConfigError: unknown builders, sets, functions or functionals,
            malformed or non-monotone ladders, duplicate labels
    """
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    try:
        canonical_json(doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config is not canonicalizable JSON: {exc}") from exc

    try:
        tolerances = _parse_tolerances(_mapping(doc.get("tolerances"), "tolerances"))
        space = _parse_space(_mapping(_require(doc, "space", "config"), "space"))
        generator = _parse_generator(_mapping(doc.get("generator"), "generator"))
        functionals = tuple(
            _parse_functional(_mapping(f, "functional"), i, tolerances["limitRtol"])
            for i, f in enumerate(doc.get("functionals", []))
        )
        seed = int(doc.get("seed", 0))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc

    if seed < 0:
        raise ConfigError(f"seed must be nonnegative, got {seed}")
    labels: List[str] = [f.label for f in functionals]
    duplicates = sorted({lab for lab in labels if labels.count(lab) > 1})
    if duplicates:
        raise ConfigError(f"duplicate functional labels {duplicates}; set 'label' to tell them apart")

    heat = _mapping(doc.get("heat"), "heat")
    strategy = heat.get("strategy", "auto")
    if strategy not in STRATEGIES:
        raise ConfigError(f"heat: unknown strategy {strategy!r}, expected one of {STRATEGIES}")

    return ExperimentConfig(
        name=str(doc.get("name", "experiment")),
        space=space,
        generator=generator,
        strategy=strategy,
        seed=seed,
        tolerances=tolerances,
        functionals=functionals,
        output=doc.get("output"),
        document=json.loads(canonical_json(doc)),
    )


def load_config(path: str) -> ExperimentConfig:
    """
    Raises:
        FileNotFoundError: no such file
        ConfigError: invalid JSON or config
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Config not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    return parse_config(doc)
