import os
import platform
import socket
from typing import Dict

import numpy
import pandas
import scipy

from app.utils.logger import LoggerManager

logger = LoggerManager.get_logger('system_info')


class SystemInfo:
    def get_system_info(self) -> Dict[str, str]:
        """
        Host and library versions recorded in the run metadata.
        """
        try:
            hostname = socket.gethostname()
        except Exception as e:
            logger.error(f"Error retrieving hostname: {str(e)}")
            hostname = "unknown_host"
        info = {
            "os": platform.system(),
            "machine_name": hostname,
            "python": platform.python_version(),
            "cpu_count": str(os.cpu_count() or 1),
            "numpy": numpy.__version__,
            "scipy": scipy.__version__,
            "pandas": pandas.__version__,
        }
        logger.debug(f"Retrieved system info: {info}")
        return info


system_info = SystemInfo()
