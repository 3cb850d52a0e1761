import time
from datetime import datetime, timezone


def utc_timestamp() -> str:
    return datetime.now(timezone.utc).isoformat()


def seconds_to_milliseconds(sec):
    """Convert seconds to milliseconds."""
    return int(sec * 1000)


class Stopwatch:
    """Wall-clock timer usable as a context manager."""
    def __init__(self):
        self.started_at = None
        self.finished_at = None
        self._start = None
        self.elapsed = 0.0

    def __enter__(self):
        self.started_at = utc_timestamp()
        self._start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.elapsed = time.perf_counter() - self._start
        self.finished_at = utc_timestamp()
        return False

    def to_dict(self) -> dict:
        return {
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "elapsed_ms": seconds_to_milliseconds(self.elapsed),
        }
