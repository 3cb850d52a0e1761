import os
from typing import Dict, Optional

from app.app_container import app_container
from app.business_logic.exceptions import ResourceError
from app.models.run_models import ResultBundle
from app.utils.logger import LoggerManager
from app.utils.object_utils import dumps_canonical


class ResultsDB:
    """
    Writes command results under the output directory:
    <command>.json (payload, config echo, seed), <command>_meta.json
    (wall clock, host, fingerprint) and one CSV per plot series.
    """
    def __init__(self, out_dir: Optional[str] = None):
        self.config = app_container.config()
        self.logger = LoggerManager.get_logger('results_db')
        self.out_dir = out_dir or self.config.OUTPUT_DIR

    def _path(self, template: str, **kwargs) -> str:
        return os.path.join(self.out_dir, template.format(**kwargs))

    def store_bundle(self, bundle: ResultBundle) -> Dict[str, str]:
        command = bundle.command.value
        try:
            os.makedirs(self.out_dir, exist_ok=True)
            paths = {"payload": self._path(self.config.PAYLOAD_FILE_NAME, command=command)}
            document = {
                "command": command,
                "seed": bundle.seed,
                "config": bundle.config,
                "payload": bundle.payload,
            }
            with open(paths["payload"], "w", encoding="utf-8") as f:
                f.write(dumps_canonical(document))
                f.write("\n")

            for name, frame in bundle.series.items():
                path = self._path(self.config.SERIES_FILE_NAME, command=command, series=name)
                frame.to_csv(path, index=False, float_format=lambda v: repr(float(v)))
                paths[name] = path

            paths["meta"] = self._path(self.config.META_FILE_NAME, command=command)
            with open(paths["meta"], "w", encoding="utf-8") as f:
                f.write(dumps_canonical(bundle.meta))
                f.write("\n")
        except OSError as e:
            self.logger.error(f"Failed to write results to {self.out_dir}: {str(e)}")
            raise ResourceError(f"could not write results to {self.out_dir}: {str(e)}") from e
        self.logger.info(f"Stored {command} results in {self.out_dir} ({len(paths)} files)")
        return paths
