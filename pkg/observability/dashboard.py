from typing import Any, Dict, Optional

from observability.obs import get_metrics


def format_observability_dashboard(manifest: Optional[Dict[str, Any]] = None) -> str:
    """Plain-text summary of the metrics store, plus ladder verdicts when a
    run manifest is given. Printed to stderr by the CLI."""
    metrics = get_metrics()

    counters = metrics.get("counters", {})
    latencies = metrics.get("latencies", {})
    timings = metrics.get("timings", {})

    lines = []
    lines.append("HEATPERIM RUN SUMMARY")
    lines.append("----------------------------------")

    for key, val in sorted(timings.items()):
        metric_name = key.replace("_", " ").title()
        lines.append(f"{metric_name}: {val:.3f}s")

    if timings:
        lines.append("")

    for key, val in sorted(latencies.items()):
        metric_name = key.replace("_", " ").title()
        lines.append(f"{metric_name}: {val:.3f}s")

    if latencies:
        lines.append("")

    for key, val in sorted(counters.items()):
        metric_name = key.replace("_", " ").title()
        lines.append(f"{metric_name}: {val}")

    if manifest is not None:
        lines.append("")
        lines.append(f"config {manifest.get('configHash', '')[:12]}")
        for entry in manifest.get("results", []):
            limit = entry.get("limitEst")
            shown = "nan" if limit is None else f"{limit:.6g}"
            lines.append(f"  {entry.get('functional')}: limit={shown} verdict={entry.get('verdict')}")
        for failure in manifest.get("failures", []):
            lines.append(f"  FAILED {failure.get('stage')}: {failure.get('error')}")

    return "\n".join(lines) + "\n"
