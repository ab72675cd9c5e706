# curvature/export.py
"""CurvatureReport export: CSV vertex,k_local plus a JSON summary."""

import json
import os
from typing import Tuple

import numpy as np
import pandas as pd

from curvature.gamma2 import CurvatureReport


def export_curvature(report: CurvatureReport, output_dir: str, stem: str = "curvature", tol: float = 1e-8) -> Tuple[str, str]:
    os.makedirs(output_dir, exist_ok=True)
    frame = pd.DataFrame({"vertex": np.arange(report.per_vertex_k.size), "k_local": report.per_vertex_k})
    csv_path = os.path.join(output_dir, f"{stem}.csv")
    json_path = os.path.join(output_dir, f"{stem}.json")
    frame.to_csv(csv_path, index=False, float_format="%.17g")

    summary = dict(report.to_dict(), tolerances={"verifier": tol})
    with open(json_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return os.path.abspath(csv_path), os.path.abspath(json_path)
