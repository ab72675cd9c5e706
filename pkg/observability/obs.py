# observability/obs.py
"""
Process-wide run metrics.

Counters track work done (semigroup applications, ladder samples, local
eigenproblems, negative kernel entries). Timings accumulate per key, so a
stage that runs in several workers reports its summed wall clock. Latencies
hold single measured values such as the total run time.
"""

import threading
import time
from collections import defaultdict
from typing import Any, DefaultDict, Dict, Optional


class MetricsStore:
    """Lock-guarded counters, latencies and accumulated timings."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._counters: DefaultDict[str, int] = defaultdict(int)
        self._latencies: Dict[str, float] = {}
        self._timings: DefaultDict[str, float] = defaultdict(float)

    def add_count(self, key: str, amount: int) -> None:
        with self._lock:
            self._counters[key] += amount

    def set_latency(self, key: str, seconds: float) -> None:
        with self._lock:
            self._latencies[key] = float(seconds)

    def add_timing(self, key: str, seconds: float) -> None:
        with self._lock:
            self._timings[key] += seconds

    def snapshot(self) -> Dict[str, Dict[str, Any]]:
        with self._lock:
            return {
                "counters": dict(self._counters),
                "latencies": dict(self._latencies),
                "timings": dict(self._timings),
            }

    def clear(self) -> None:
        with self._lock:
            self._counters.clear()
            self._latencies.clear()
            self._timings.clear()


_STORE = MetricsStore()


def inc(key: str, amount: int = 1) -> None:
    _STORE.add_count(key, amount)


def record_latency(key: str, value: float) -> None:
    """Store a single latency in seconds, replacing any earlier value."""
    _STORE.set_latency(key, value)


class timer:
    """
    Accumulating wall-clock timer.

        with timer("spectral_factorization") as t:
            ...
        t.duration  # seconds spent in this block only
    """

    def __init__(self, key: str):
        self.key = key
        self.duration = 0.0
        self._started: Optional[float] = None

    def __enter__(self) -> "timer":
        self._started = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        self.duration = time.perf_counter() - (self._started or 0.0)
        _STORE.add_timing(self.key, self.duration)
        return False


def get_metrics() -> Dict[str, Dict[str, Any]]:
    """Copy of every section; mutating it leaves the store untouched."""
    return _STORE.snapshot()


def reset_metrics() -> None:
    """Called at the start of every experiment run."""
    _STORE.clear()
