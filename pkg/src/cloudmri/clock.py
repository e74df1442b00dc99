"""Injectable simulated clock shared by scheduler, ledger, and monitor."""

from __future__ import annotations

import threading


class SimClock:
    """Monotone simulated time in seconds. Thread-safe."""

    def __init__(self, start: float = 0.0):
        self._now = float(start)
        self._lock = threading.Lock()

    def now(self) -> float:
        with self._lock:
            return self._now

    def advance(self, seconds: float) -> float:
        if seconds < 0:
            raise ValueError("clock cannot move backwards")
        with self._lock:
            self._now += seconds
            return self._now

    def set(self, t: float) -> None:
        with self._lock:
            if t < self._now:
                raise ValueError("clock cannot move backwards")
            self._now = float(t)
