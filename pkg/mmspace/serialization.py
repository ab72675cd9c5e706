# mmspace/serialization.py
"""
Canonical JSON form of a MetricMeasureSpace.

    {"dist": {...}, "label": str, "mu": [...], "n": int}

dist is either {"kind": "dense", "rows": lower triangle, row i holding
d(i, 0..i-1)} or {"kind": "generated", "builder": name, "params": {...}}.
Keys are sorted and separators carry no whitespace, so serializing a
deserialized space reproduces the input byte for byte.
"""

import json
from typing import Any, Dict

import numpy as np

from mmspace.errors import ConfigError
from mmspace.space import MetricMeasureSpace


def _canonical(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def space_to_dict(space: MetricMeasureSpace) -> Dict[str, Any]:
    if space.recipe is not None:
        dist: Dict[str, Any] = {
            "kind": "generated",
            "builder": space.recipe["builder"],
            "params": dict(space.recipe["params"]),
        }
    else:
        d = space.dist
        dist = {"kind": "dense", "rows": [d[i, :i].tolist() for i in range(space.n)]}
    return {
        "dist": dist,
        "label": space.label,
        "mu": space.mu.tolist(),
        "n": space.n,
    }


def serialize_space(space: MetricMeasureSpace) -> str:
    """Canonical JSON text of the space."""
    return _canonical(space_to_dict(space))


def space_from_dict(doc: Dict[str, Any]) -> MetricMeasureSpace:
    """
    Raises:
        ConfigError: malformed document, or a generated space whose rebuilt
            measure differs from the stored one
    """
    try:
        n = int(doc["n"])
        mu = np.array(doc["mu"], dtype=float)
        label = str(doc.get("label", ""))
        dist = doc["dist"]
        kind = dist["kind"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed space document: {exc}") from exc
    if mu.size != n:
        raise ConfigError(f"space document declares n={n} but carries {mu.size} weights")

    if kind == "generated":
        from harness.builders import build_space

        space = build_space(dist["builder"], dist.get("params", {}))
        if space.n != n or not np.array_equal(space.mu, mu):
            raise ConfigError(f"rebuilt {dist['builder']} space does not match the stored measure")
        space.label = label
        return space

    if kind == "dense":
        rows = dist["rows"]
        if len(rows) != n:
            raise ConfigError(f"dense space document has {len(rows)} rows for n={n}")
        full = np.zeros((n, n))
        for i, row in enumerate(rows):
            if len(row) != i:
                raise ConfigError(f"row {i} of the lower triangle must hold {i} entries")
            full[i, :i] = row
        full = full + full.T
        return MetricMeasureSpace(mu, dist=full, label=label)

    raise ConfigError(f"unknown dist kind {kind!r}")


def deserialize_space(text: str) -> MetricMeasureSpace:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"space document is not valid JSON: {exc}") from exc
    return space_from_dict(doc)
