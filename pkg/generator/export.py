# generator/export.py
"""Generator export: sparse triplet CSV (i,j,value) plus a JSON sidecar."""

import json
import os
from typing import Dict, Tuple

import numpy as np
import pandas as pd

from generator.generator import Generator


def generator_sidecar(gen: Generator) -> Dict:
    return {
        "h": gen.h,
        "rule": gen.rule,
        "kernel": gen.kernel,
        "calibration": None if np.isnan(gen.calibration) else gen.calibration,
        "muHash": gen.space.mu_hash,
        "n": gen.n,
        "space": gen.space.label,
    }


def export_generator(gen: Generator, output_dir: str, stem: str = "generator") -> Tuple[str, str]:
    """
    Write <stem>.csv and <stem>.json into output_dir.

    Returns:
        Absolute paths of the CSV and the sidecar
    """
    os.makedirs(output_dir, exist_ok=True)
    coo = gen.A.tocoo()
    frame = pd.DataFrame({"i": coo.row, "j": coo.col, "value": coo.data})
    frame = frame.sort_values(["i", "j"], kind="stable")

    csv_path = os.path.join(output_dir, f"{stem}.csv")
    json_path = os.path.join(output_dir, f"{stem}.json")
    frame.to_csv(csv_path, index=False, float_format="%.17g")
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(generator_sidecar(gen), fh, sort_keys=True, indent=2)
        fh.write("\n")
    return os.path.abspath(csv_path), os.path.abspath(json_path)
