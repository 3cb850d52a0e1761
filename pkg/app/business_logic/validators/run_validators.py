import os

from app.models.confset_models import ParamGrid
from app.models.run_models import RunConfig
from app.models.statuses_enums import CommandEnum
from app.utils.logger import LoggerManager


class RunValidators:
    def __init__(self, max_grid_points: int):
        self.logger = LoggerManager.get_logger('run_validators')
        self.max_grid_points = max_grid_points

    def validate_data_path_exists(self, config: RunConfig):
        if config.data is not None and not os.path.isfile(config.data.path):
            self.logger.warning(f"Data file {config.data.path} does not exist")
            return False
        return True

    def validate_grid_size(self, grid: ParamGrid, factor: int = 1):
        size = grid.size * factor
        if size > self.max_grid_points:
            self.logger.warning(f"Grid of {size} points exceeds the limit of {self.max_grid_points}")
            return False
        return True

    def validate_grid_dimension(self, grid: ParamGrid, k: int):
        if grid.k != k:
            self.logger.warning(f"Grid has {grid.k} coordinates but the covariates have k={k}")
            return False
        return True

    def validate_joint_inputs(self, config: RunConfig):
        if config.command == CommandEnum.joint and config.y_tilde is not None and config.y_tilde <= 0:
            self.logger.warning("y_tilde must be positive")
            return False
        return True

    def validate_run(self, config: RunConfig):
        self.logger.info(f"Validating {config.command.value} run...")
        result = self.validate_data_path_exists(config) and self.validate_joint_inputs(config)
        self.logger.info(f"Run validation {'passed' if result else 'failed'}")
        return result
