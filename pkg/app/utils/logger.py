"""
One loguru sink on stderr, shared by every component; stdout is left for
command output. Each component gets a logger bound to its name, which the
sink prints as a [name] prefix.
"""
import sys
import threading
from typing import TYPE_CHECKING, Dict, Optional

from loguru import logger

if TYPE_CHECKING:
    from loguru import Logger

LOG_FORMAT = (
    "<green>{time:YYYY-MM-DD HH:mm:ss.SSS}</green> | <level>{level: <8}</level> | "
    "[{extra[component]}] {message}"
)


class LoggerManager:
    """
    Holds one bound logger per component name.
    Thread-safe; the sink is installed on first use and replaced by configure.
    """
    _loggers: Dict[str, "Logger"] = {}
    _lock = threading.Lock()
    _level: str = 'INFO'
    _sink_id: Optional[int] = None

    @classmethod
    def _install_sink(cls) -> None:
        if cls._sink_id is None:
            logger.remove()
            # records logged outside a component still need the field
            logger.configure(extra={"component": "-"})
        else:
            logger.remove(cls._sink_id)
        cls._sink_id = logger.add(sys.stderr, level=cls._level, format=LOG_FORMAT)

    @classmethod
    def configure(cls, level: str = 'INFO') -> None:
        with cls._lock:
            cls._level = level.upper()
            cls._install_sink()

    @classmethod
    def get_logger(cls, name: str = 'default') -> "Logger":
        with cls._lock:
            if cls._sink_id is None:
                cls._install_sink()
            if name not in cls._loggers:
                cls._loggers[name] = logger.bind(component=name)
            return cls._loggers[name]
