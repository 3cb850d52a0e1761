import threading
import time
from typing import Dict

from app.utils.logger import LoggerManager


class ProgressMonitor:
    """
    Counts finished jobs of one batch (grid points, replications) and logs
    progress every `every` completions.
    """
    def __init__(self, label: str, total: int, every: int = 50):
        self.label = label
        self.total = total
        self.every = max(int(every), 1)
        self.logger = LoggerManager.get_logger("progress_monitor")
        self._lock = threading.Lock()
        self._started = time.perf_counter()
        self.metrics = {
            "completed": 0,
            "failed": 0,
            "processing_times": [],
        }

    def record_processed(self, processing_time: float):
        with self._lock:
            self.metrics["completed"] += 1
            self.metrics["processing_times"].append(processing_time)
            done = self.metrics["completed"]
        if done % self.every == 0 or done == self.total:
            elapsed = time.perf_counter() - self._started
            self.logger.info(f"{self.label}: {done}/{self.total} done after {elapsed:.1f}s")

    def record_failed(self):
        with self._lock:
            self.metrics["failed"] += 1

    def get_processing_metrics(self) -> Dict:
        times = self.metrics["processing_times"]
        return {
            "label": self.label,
            "total": self.total,
            "completed": self.metrics["completed"],
            "failed": self.metrics["failed"],
            "average_processing_time": sum(times) / len(times) if times else 0.0,
        }
