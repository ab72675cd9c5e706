# tests/test_observability.py
import pytest

from observability.dashboard import format_observability_dashboard
from observability.obs import get_metrics, inc, record_latency, reset_metrics, timer


def test_counters_accumulate():
    inc("semigroup_applications")
    inc("semigroup_applications", 4)
    assert get_metrics()["counters"]["semigroup_applications"] == 5


def test_timer_accumulates_per_key():
    with timer("stage_build_space") as t:
        pass
    with timer("stage_build_space"):
        pass
    total = get_metrics()["timings"]["stage_build_space"]
    assert total >= t.duration >= 0.0


def test_timer_does_not_swallow_errors():
    with pytest.raises(KeyError):
        with timer("stage_ladder"):
            raise KeyError("boom")
    assert "stage_ladder" in get_metrics()["timings"]


def test_get_metrics_returns_a_copy():
    inc("local_eigenproblems")
    snapshot = get_metrics()
    snapshot["counters"]["local_eigenproblems"] = 100
    assert get_metrics()["counters"]["local_eigenproblems"] == 1


def test_reset_clears_every_section():
    inc("ladder_samples")
    record_latency("run_total", 0.5)
    reset_metrics()
    assert get_metrics() == {"counters": {}, "latencies": {}, "timings": {}}


def test_dashboard_lists_metrics_and_verdicts():
    inc("semigroup_applications", 3)
    record_latency("run_total", 1.25)
    manifest = {
        "configHash": "abcdef0123456789",
        "results": [
            {"functional": "deGiorgi", "limitEst": 2.0, "verdict": "finite"},
            {"functional": "ledouxLocal", "limitEst": None, "verdict": "no plateau"},
        ],
        "failures": [{"stage": "ladder:mazya", "error": "bad ladder"}],
    }
    text = format_observability_dashboard(manifest)
    assert text.startswith("HEATPERIM RUN SUMMARY")
    assert "Semigroup Applications: 3" in text
    assert "Run Total: 1.250s" in text
    assert "config abcdef012345" in text
    assert "deGiorgi: limit=2 verdict=finite" in text
    assert "ledouxLocal: limit=nan verdict=no plateau" in text
    assert "FAILED ladder:mazya: bad ladder" in text


def test_dashboard_without_manifest():
    assert format_observability_dashboard() == "HEATPERIM RUN SUMMARY\n----------------------------------\n"
