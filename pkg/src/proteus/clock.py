"""Injectable clocks so crawling and responses can be made reproducible."""

from __future__ import annotations

import threading
import time
from datetime import datetime, timedelta, timezone
from typing import Protocol


class Clock(Protocol):
    def now(self) -> datetime: ...

    def time(self) -> float: ...

    def sleep(self, seconds: float) -> None: ...


class SystemClock:
    def __init__(self, stop: threading.Event | None = None) -> None:
        self._stop = stop or threading.Event()

    def now(self) -> datetime:
        return datetime.now(timezone.utc)

    def time(self) -> float:
        return time.time()

    def sleep(self, seconds: float) -> None:
        # Interruptible so background crawlers shut down promptly.
        self._stop.wait(max(0.0, seconds))


class FixedClock:
    """Always reports the same instant; ``sleep`` is a no-op."""

    def __init__(self, when: datetime) -> None:
        self._when = when

    def now(self) -> datetime:
        return self._when

    def time(self) -> float:
        return self._when.timestamp()

    def sleep(self, seconds: float) -> None:
        pass


class SimulatedClock:
    """Manually advanced clock; ``sleep`` advances time instead of blocking."""

    def __init__(self, start: datetime | None = None) -> None:
        self._start = start or datetime(2026, 1, 1, tzinfo=timezone.utc)
        self._offset = 0.0
        self._lock = threading.Lock()

    def now(self) -> datetime:
        return self._start + timedelta(seconds=self._offset)

    def time(self) -> float:
        return self._start.timestamp() + self._offset

    def advance(self, seconds: float) -> None:
        with self._lock:
            self._offset += seconds

    def sleep(self, seconds: float) -> None:
        self.advance(max(0.0, seconds))


def parse_instant(text: str) -> datetime:
    """Parse an ISO-8601 instant; naive values are taken as UTC."""
    when = datetime.fromisoformat(text.replace("Z", "+00:00"))
    return when if when.tzinfo else when.replace(tzinfo=timezone.utc)
