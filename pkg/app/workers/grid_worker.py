import asyncio
import time
from typing import Callable, List, Optional, Sequence, TypeVar

from app.monitoring.progress_monitor import ProgressMonitor
from app.utils.logger import LoggerManager

T = TypeVar("T")


class GridWorker:
    """
    Bounded pool for independent jobs (grid points, Monte Carlo replications).
    Jobs are plain callables; results come back in submission order.
    """
    def __init__(self, max_workers: int = 1, progress_every: int = 50):
        if max_workers < 1:
            raise ValueError("max_workers must be at least 1")
        self.logger = LoggerManager.get_logger("grid_worker")
        self.max_workers = max_workers
        self.progress_every = progress_every
        self.last_metrics: Optional[dict] = None

    def run(self, jobs: Sequence[Callable[[], T]], label: str = "jobs") -> List[T]:
        monitor = ProgressMonitor(label, len(jobs), self.progress_every)
        self.logger.info(f"Running {len(jobs)} {label} on {self.max_workers} worker(s)")
        if self.max_workers == 1 or len(jobs) <= 1:
            results = [self._timed(job, monitor) for job in jobs]
        else:
            results = asyncio.run(self._run_all(jobs, monitor))
        self.last_metrics = monitor.get_processing_metrics()
        return results

    @staticmethod
    def _timed(job: Callable[[], T], monitor: ProgressMonitor) -> T:
        start = time.perf_counter()
        try:
            result = job()
        except Exception:
            monitor.record_failed()
            raise
        monitor.record_processed(time.perf_counter() - start)
        return result

    async def _run_all(self, jobs: Sequence[Callable[[], T]], monitor: ProgressMonitor) -> List[T]:
        semaphore = asyncio.Semaphore(self.max_workers)

        async def run_one(job):
            async with semaphore:
                return await asyncio.to_thread(self._timed, job, monitor)

        tasks = [run_one(job) for job in jobs]
        return list(await asyncio.gather(*tasks))
