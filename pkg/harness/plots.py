# harness/plots.py
"""
Convergence plots of parameter ladders as SVG 1.1 documents.

Rendering goes through matplotlib's Agg/SVG backends on a standalone Figure
(no pyplot state), with a fixed hash salt and no date metadata so that equal
ladders give byte-identical documents.
"""

import io
from dataclasses import dataclass
from typing import Optional

import matplotlib

matplotlib.use("Agg")

from matplotlib.figure import Figure  # noqa: E402
import numpy as np  # noqa: E402

from functionals.ladder import NO_PLATEAU, FunctionalLadder  # noqa: E402

_RC = {"svg.hashsalt": "heatperim", "svg.fonttype": "none"}


@dataclass(frozen=True)
class PlotStyle:
    width: float = 6.0
    height: float = 4.0
    color: str = "#1f4e79"
    window_color: str = "#cfe2f3"
    limit_color: str = "#b22222"
    marker: str = "o"


def emit_plot(ladder: FunctionalLadder, style: Optional[PlotStyle] = None, path: Optional[str] = None) -> str:
    """
    Log-x plot of value against parameter with the trusted window shaded,
    a dashed asymptote at a finite limit estimate, and a "no plateau"
    banner for divergent ladders.

    Args:
        ladder: Nonempty ladder
        style: Plot style (default: PlotStyle())
        path: When given, the document is also written there

    Returns:
        The SVG document as text
    """
    if not ladder.samples:
        raise ValueError("cannot plot an empty ladder")
    style = style or PlotStyle()
    params, values = ladder.params, ladder.values

    with matplotlib.rc_context(_RC):
        fig = Figure(figsize=(style.width, style.height))
        ax = fig.add_subplot(1, 1, 1)
        ax.set_xscale("log")

        inside = ladder.in_window
        if inside.any():
            lo = float(ladder.window[0])
            hi = float(params[inside].max())
            ax.axvspan(lo, hi * 1.02, color=style.window_color, alpha=0.6, lw=0, label="trusted window")

        ax.plot(params, values, marker=style.marker, color=style.color, lw=1.2 if params.size > 1 else 0, label=ladder.name)

        if np.isfinite(ladder.limit_est):
            ax.axhline(ladder.limit_est, color=style.limit_color, ls="--", lw=1.0)
            ax.annotate(
                f"limit {ladder.limit_est:.4g}",
                xy=(float(params.min()), ladder.limit_est),
                xytext=(4, 4), textcoords="offset points", color=style.limit_color,
            )

        if ladder.verdict == NO_PLATEAU:
            ax.text(
                0.5, 0.94, "no plateau", transform=ax.transAxes, ha="center", va="top",
                color="white", bbox={"facecolor": style.limit_color, "edgecolor": "none"},
            )

        ax.set_xlabel("parameter")
        ax.set_ylabel(ladder.name)
        ax.set_title(f"{ladder.name} on {ladder.space}" if ladder.space else ladder.name)
        ax.legend(loc="best", fontsize="small")
        fig.tight_layout()

        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
    svg = buf.getvalue()

    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(svg)
    return svg
