from typing import Optional

from app.app_container import app_container
from app.business_logic.runs_bl import RunsBusinessLogic
from app.db.results_db import ResultsDB
from app.utils.logger import LoggerManager
from app.workers.grid_worker import GridWorker

logger = LoggerManager.get_logger('dependencies')


def get_grid_worker(threads: Optional[int] = None) -> GridWorker:
    """Worker pool from the container, with an explicit thread count when given."""
    if threads is None:
        return app_container.grid_worker()
    config = app_container.config()
    return GridWorker(max_workers=threads, progress_every=config.PROGRESS_EVERY)


def get_runs_bl(threads: Optional[int] = None) -> RunsBusinessLogic:
    worker = get_grid_worker(threads)
    logger.debug(f"Run orchestrator with {worker.max_workers} worker(s)")
    return RunsBusinessLogic(grid_worker=worker)


def get_results_db(out_dir: Optional[str] = None) -> ResultsDB:
    return ResultsDB(out_dir=out_dir)
