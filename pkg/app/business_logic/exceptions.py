"""
Custom exception classes for the censored-bounds library.
Provides descriptive errors that the CLI maps to exit codes.
"""

class CensoredBoundsError(Exception):
    """Base exception for all censored-bounds errors."""
    pass

class IngestionError(CensoredBoundsError):
    """Exception raised when a data file cannot be turned into a Sample."""

    def __init__(self, message: str, row: int = None, column: str = None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column '{column}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
        self.row = row
        self.column = column

class NormalizationError(CensoredBoundsError):
    """Exception raised when a parameter vector violates the scale normalization."""
    pass

class DimensionError(CensoredBoundsError):
    """Exception raised when covariate and parameter dimensions disagree."""
    pass

class SampleSizeError(CensoredBoundsError):
    """Exception raised when a sample is too small for the requested statistic."""
    pass

class TuningError(CensoredBoundsError):
    """Exception raised for invalid or undefined tuning parameters."""
    pass

class InstrumentError(CensoredBoundsError):
    """Exception raised for invalid instrument family requests."""
    pass

class NumericError(CensoredBoundsError):
    """Exception raised for numerical failures (singular matrices, non-finite values)."""
    pass

class GridError(CensoredBoundsError):
    """Exception raised for empty or malformed search grids."""
    pass

class DgpSpecError(CensoredBoundsError):
    """Exception raised for invalid data generating process specifications."""
    pass

class ConfigError(CensoredBoundsError):
    """Exception raised for configuration errors."""
    pass

class ResourceError(CensoredBoundsError):
    """Exception raised when a computation exceeds a configured memory cap."""
    pass

class MapperError(CensoredBoundsError):
    """Exception raised for result mapping errors."""
    pass
