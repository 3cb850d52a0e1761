"""
Application-level exception handlers.
These functions turn library exceptions into standardized responses carrying a process exit code.
"""
from app.business_logic.exceptions import (
    CensoredBoundsError,
    ConfigError,
    DgpSpecError,
    DimensionError,
    GridError,
    IngestionError,
    InstrumentError,
    NormalizationError,
    NumericError,
    ResourceError,
    SampleSizeError,
    TuningError,
)
from app.utils.logger import LoggerManager

error_logger = LoggerManager.get_logger('app_errors')

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_ERROR = 3

class ErrorHandlers:
    """
    A collection of static methods for handling different types of exceptions.
    """

    @staticmethod
    def handle_input_error(error: CensoredBoundsError):
        """
        Handles errors caused by the user's inputs: config files, data files,
        grids, tuning values and parameter vectors.

        Args:
            error: The error that occurred.

        Returns:
            dict: A standardized error response.
        """
        error_logger.warning(f"Input error: {str(error)}")
        return {
            "error": "input_error",
            "message": str(error),
            "exit_code": EXIT_CONFIG_ERROR,
            "retry": False
        }

    @staticmethod
    def handle_config_error(error: ConfigError):
        """
        Handles configuration errors.

        Args:
            error: The configuration error that occurred.

        Returns:
            dict: A standardized error response.
        """
        error_logger.error(f"Configuration error: {str(error)}")
        return {
            "error": "config_error",
            "message": str(error),
            "exit_code": EXIT_CONFIG_ERROR,
            "retry": False
        }

    @staticmethod
    def handle_numeric_error(error: NumericError):
        """
        Handles numerical failures (non-finite kernels, failed factorizations).

        Args:
            error: The numeric error that occurred.

        Returns:
            dict: A standardized error response.
        """
        error_logger.error(f"Numeric error: {str(error)}")
        return {
            "error": "numeric_error",
            "message": str(error),
            "exit_code": EXIT_NUMERIC_ERROR,
            "retry": False
        }

    @staticmethod
    def handle_resource_error(error: ResourceError):
        """
        Handles computations that exceed a configured memory cap.

        Args:
            error: The resource error that occurred.

        Returns:
            dict: A standardized error response.
        """
        error_logger.error(f"Resource error: {str(error)}")
        return {
            "error": "resource_error",
            "message": str(error),
            "exit_code": EXIT_NUMERIC_ERROR,
            "retry": True
        }

    @staticmethod
    def handle_generic_error(error: Exception):
        """
        Handles any other unexpected exceptions.

        Args:
            error: The unexpected error that occurred.

        Returns:
            dict: A standardized error response.
        """
        error_logger.critical(f"Unexpected error: {str(error)}")
        return {
            "error": "internal_error",
            "message": str(error),
            "exit_code": EXIT_NUMERIC_ERROR,
            "retry": False
        }

    @classmethod
    def get_error_handler(cls, error: Exception):
        """
        Gets the appropriate error handler for a given exception.

        Args:
            error: The exception to handle.

        Returns:
            function: The appropriate error handler function.
        """
        if isinstance(error, ConfigError):
            return cls.handle_config_error
        elif isinstance(error, (IngestionError, NormalizationError, DimensionError, SampleSizeError,
                                TuningError, InstrumentError, GridError, DgpSpecError)):
            return cls.handle_input_error
        elif isinstance(error, ResourceError):
            return cls.handle_resource_error
        elif isinstance(error, NumericError):
            return cls.handle_numeric_error
        else:
            return cls.handle_generic_error
