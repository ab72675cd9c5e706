# harness/persist.py
"""
Result files of a run directory: ladders.csv, <label>.dat, <label>.svg,
vectors.jsonl and manifest.json. Every writer returns the absolute path it
wrote.
"""

import json
import os
import re
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np
import pandas as pd

from functionals.ladder import FunctionalLadder, LadderSample

LADDER_COLUMNS = ["functional", "space", "param", "value", "in_window", "limit_est", "verdict"]
FLOAT_FORMAT = "%.17g"


def ensure_output_dir(output_dir: str) -> str:
    """
    Raises:
        RuntimeError: the path exists and is not a writable directory
    """
    os.makedirs(output_dir, exist_ok=True)
    if not os.path.isdir(output_dir) or not os.access(output_dir, os.W_OK):
        raise RuntimeError(f"Output directory is not writable: {output_dir}")
    return os.path.abspath(output_dir)


def safe_stem(label: str) -> str:
    """File-name stem for a functional label."""
    stem = re.sub(r"[^A-Za-z0-9_.-]+", "_", label).strip("._")
    return stem or "ladder"


def ladders_frame(ladders: Sequence[FunctionalLadder]) -> pd.DataFrame:
    rows: List[Dict[str, Any]] = []
    for ladder in ladders:
        rows.extend(ladder.rows())
    return pd.DataFrame(rows, columns=LADDER_COLUMNS)


def write_ladders_csv(ladders: Sequence[FunctionalLadder], path: str) -> str:
    ladders_frame(ladders).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return os.path.abspath(path)


def read_ladders_csv(path: str) -> pd.DataFrame:
    if not os.path.exists(path):
        raise FileNotFoundError(f"Ladder CSV not found: {path}")
    frame = pd.read_csv(path)
    if list(frame.columns) != LADDER_COLUMNS:
        raise RuntimeError(f"{path}: columns {list(frame.columns)} do not match {LADDER_COLUMNS}")
    return frame


def ladders_from_frame(frame: pd.DataFrame) -> List[FunctionalLadder]:
    """
    Rebuild ladders from CSV rows, in order of first appearance. The window
    lower end is the smallest in-window parameter, since the threshold itself
    is not stored.
    """
    ladders: List[FunctionalLadder] = []
    for name in pd.unique(frame["functional"]):
        rows = frame[frame["functional"] == name]
        inside = (rows["in_window"].astype(str).str.lower() == "true").to_numpy()
        samples = tuple(
            LadderSample(float(p), float(v), bool(w)) for p, v, w in zip(rows["param"], rows["value"], inside)
        )
        params = rows["param"].to_numpy(dtype=float)
        window = (float(params[inside].min()), float(params[inside].max())) if inside.any() else (float("nan"), float("nan"))
        window_vals = rows["value"].to_numpy(dtype=float)[inside]
        ladders.append(FunctionalLadder(
            name=str(name),
            space="" if pd.isna(rows["space"].iloc[0]) else str(rows["space"].iloc[0]),
            samples=samples,
            window=window,
            limit_est=float(rows["limit_est"].iloc[0]),
            window_min=float(window_vals.min()) if window_vals.size else float("nan"),
            verdict=str(rows["verdict"].iloc[0]),
        ))
    return ladders


def write_dat(ladder: FunctionalLadder, path: str) -> str:
    """gnuplot-compatible columns: param value in_window(0/1)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {ladder.name} on {ladder.space}\n")
        fh.write(f"# limit_est {ladder.limit_est!r} verdict {ladder.verdict}\n")
        fh.write("# param value in_window\n")
        for s in ladder.samples:
            fh.write(f"{s.param!r} {s.value!r} {int(s.in_window)}\n")
    return os.path.abspath(path)


def write_vectors(records: Iterable[Dict[str, Any]], path: str) -> str:
    """One JSON object per line; numpy arrays become lists."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            clean = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in rec.items()}
            fh.write(json.dumps(clean, sort_keys=True, separators=(",", ":")))
            fh.write("\n")
    return os.path.abspath(path)


def write_manifest(manifest: Dict[str, Any], path: str) -> str:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return os.path.abspath(path)
