import os
from app.config.base import AppConfig, ProdConfig, DevConfig
from app.utils.logger import LoggerManager
from app.business_logic.exceptions import ConfigError

logger = LoggerManager.get_logger("config")

def get_config() -> AppConfig:
    env = os.getenv("ENV", "dev").lower()

    if env == "prod":
        config = ProdConfig.from_env()
    elif env == "dev":
        config = DevConfig.from_env()
    else:
        logger.error("ENV environment variable must be 'dev' or 'prod'.")
        raise ConfigError("ENV environment variable must be 'dev' or 'prod'.")

    LoggerManager.configure(config.LOG_LEVEL)
    return config

__all__ = ['get_config', 'AppConfig', 'ProdConfig', 'DevConfig']
