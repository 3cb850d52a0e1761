from dependency_injector import containers, providers
from app.config import get_config, AppConfig
from app.workers.grid_worker import GridWorker


class AppContainer(containers.DeclarativeContainer):
    config: AppConfig = providers.Singleton(get_config)
    grid_worker: GridWorker = providers.Factory(
        GridWorker,
        max_workers=config.provided.DEFAULT_THREADS,
        progress_every=config.provided.PROGRESS_EVERY,
    )

app_container = AppContainer()
