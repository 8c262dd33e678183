"""Token-bucket rate limiting shared by the server and the http provider."""

from __future__ import annotations

import threading
import time
from typing import Callable


class TokenBucket:
    """Token bucket refilled continuously at ``capacity`` tokens per ``period`` seconds."""

    def __init__(self, capacity: int, period: float = 60.0, clock: Callable[[], float] = time.monotonic) -> None:
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = float(capacity)
        self.rate = capacity / period
        self.tokens = float(capacity)
        self._clock = clock
        self._last = clock()
        self._lock = threading.Lock()

    def try_acquire(self) -> bool:
        with self._lock:
            now = self._clock()
            self.tokens = min(self.capacity, self.tokens + (now - self._last) * self.rate)
            self._last = now
            if self.tokens >= 1.0:
                self.tokens -= 1.0
                return True
            return False
