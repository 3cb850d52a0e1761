import os
from dataclasses import dataclass
from dotenv import load_dotenv
from app.utils.logger import LoggerManager
from app.business_logic.exceptions import ConfigError

# Get logger for configuration
logger = LoggerManager.get_logger("config")

try:
    # Load environment variables from a .env file into the environment.
    load_dotenv()
    logger.debug("Environment variables loaded from .env file")
except Exception as e:
    logger.warning(f"Failed to load .env file: {str(e)}")

@dataclass()
class AppConfig:
    # Base settings
    LOG_LEVEL: str = "info"

    # Worker pool
    DEFAULT_THREADS: int = 1

    # Resource caps
    # G_total above this refuses to build the covariance matrix
    MAX_INSTRUMENTS: int = 6000
    MAX_GRID_POINTS: int = 2_000_000
    # ordered pairs x instruments held by the sparse incidence matrix
    MAX_INCIDENCE_ENTRIES: int = 200_000_000

    # Output
    OUTPUT_DIR: str = "results"
    PAYLOAD_FILE_NAME: str = "{command}.json"
    META_FILE_NAME: str = "{command}_meta.json"
    SERIES_FILE_NAME: str = "{command}_{series}.csv"

    # Data
    DATA_DIR: str = "data"
    STANFORD_FILE_NAME: str = "stanford_heart.csv"
    STANFORD_SOURCE_URL: str = "https://vincentarelbundock.github.io/Rdatasets/csv/survival/jasa.csv"

    # Progress reporting every N finished jobs
    PROGRESS_EVERY: int = 50

    @classmethod
    def from_env(cls) -> "AppConfig":
        """
        Build a config from the process environment, keeping defaults for
        unset keys and casting to each field's declared type.
        """
        values = {}
        for name, field in cls.__dataclass_fields__.items():
            raw = os.getenv(name)
            if raw is None:
                continue
            caster = field.type if isinstance(field.type, type) else type(field.default)
            try:
                values[name] = caster(raw)
            except (TypeError, ValueError):
                raise ConfigError(f"Environment variable {name}={raw!r} is not a valid {caster.__name__}")
        return cls(**values)

class ProdConfig(AppConfig):
    pass

class DevConfig(AppConfig):
    pass
