"""Clocks used for timestamps in logs and run records.

The logical clock makes timestamps a pure function of call order, which is
what keeps offline benchmark runs byte-reproducible.
"""

from __future__ import annotations

import threading
import time
from datetime import datetime, timedelta, timezone
from typing import Protocol

_EPOCH = datetime(2023, 1, 1, tzinfo=timezone.utc)


class Clock(Protocol):
    def now(self) -> str: ...

    def monotonic(self) -> float: ...


class WallClock:
    def now(self) -> str:
        return datetime.now(timezone.utc).isoformat(timespec="microseconds")

    def monotonic(self) -> float:
        return time.perf_counter()


class LogicalClock:
    """Advances one millisecond per reading."""

    def __init__(self) -> None:
        self._ticks = 0
        self._lock = threading.Lock()

    def _tick(self) -> int:
        with self._lock:
            self._ticks += 1
            return self._ticks

    def now(self) -> str:
        t = self._tick()
        return (_EPOCH + timedelta(milliseconds=t)).isoformat(timespec="microseconds")

    def monotonic(self) -> float:
        return self._tick() / 1000.0


def make_clock(kind: str) -> Clock:
    if kind == "wall":
        return WallClock()
    if kind == "logical":
        return LogicalClock()
    raise ValueError(f"unknown clock kind {kind!r}")
