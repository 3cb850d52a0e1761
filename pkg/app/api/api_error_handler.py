"""
CLI-specific error handling utilities.
Turns exceptions raised by commands into process exit codes.
"""
from functools import wraps

from pydantic import ValidationError

from app.business_logic.error_handlers import EXIT_CONFIG_ERROR, ErrorHandlers
from app.utils.logger import LoggerManager

logger = LoggerManager.get_logger('api_error_handler')


def handle_cli_exceptions(func):
    """
    Decorator for CLI entry points returning an exit code.
    Library errors are mapped through ErrorHandlers; pydantic validation errors
    raised while building models from user input count as config errors.

    Usage:
        @handle_cli_exceptions
        def main(argv) -> int:
            ...
    """
    @wraps(func)
    def wrapper(*args, **kwargs) -> int:
        try:
            return func(*args, **kwargs)
        except ValidationError as e:
            logger.error(f"Invalid configuration: {str(e)}")
            return EXIT_CONFIG_ERROR
        except KeyboardInterrupt:
            logger.warning("Interrupted")
            return 130
        except Exception as e:
            response = ErrorHandlers.get_error_handler(e)(e)
            logger.error(f"{response['error']}: {response['message']}")
            return response["exit_code"]
    return wrapper
