"""
Error handling utilities for the library.
Provides a decorator for standardized exception handling in business logic entry points.
"""
import functools
import traceback
from app.utils.logger import LoggerManager
from app.business_logic.exceptions import CensoredBoundsError, NumericError

error_logger = LoggerManager.get_logger('error_handler')

def handle_exceptions(logger=None):
    """
    A decorator to handle exceptions in a standardized way.

    Known library errors are logged and re-raised unchanged. Anything else is
    logged with its traceback and wrapped into a NumericError, since at this
    level an unexpected failure means a computation broke.

    Args:
        logger: The logger to use. If None, uses the error_handler logger.

    Usage:
        @handle_exceptions(logger=some_logger)
        def my_function():
            ...
    """
    if logger is None:
        logger = error_logger

    def decorator(func):
        @functools.wraps(func)
        def wrapper(*args, **kwargs):
            try:
                return func(*args, **kwargs)
            except CensoredBoundsError as e:
                logger.error(f"{e.__class__.__name__}: {str(e)}")
                raise e
            except Exception as e:
                logger.critical(
                    f"Unexpected error in {func.__name__}: {str(e)}\n"
                    f"Traceback: {traceback.format_exc()}"
                )
                raise NumericError(f"Unexpected error: {str(e)}") from e
        return wrapper
    return decorator
