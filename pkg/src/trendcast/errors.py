"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ConfigurationError -> 2,
CompatibilityError and SchemaError -> 3, NumericalError -> 4.
"""


class TrendcastError(Exception):
    """Base class for all package errors."""


class DimensionError(TrendcastError):
    """Operand shapes are incompatible for the requested operation."""


class ContractError(TrendcastError):
    """A documented precondition was violated by the caller."""


class ConfigurationError(TrendcastError):
    """Invalid configuration value or unknown configuration key."""


class CompatibilityError(TrendcastError):
    """Checkpoint, provider, or dataset dimensions do not match."""


class SchemaError(TrendcastError):
    """Input file does not conform to its documented schema."""


class ValidationError(TrendcastError):
    """A value is outside its documented domain."""


class NumericalError(TrendcastError):
    """A numeric failure (NaN gradient, degenerate variance, ...)."""


class UndefinedMetricError(NumericalError):
    """Metric is undefined for the given data (e.g. zero denominator)."""


class DegenerateSeriesError(NumericalError):
    """Series has no variance, so the statistic is undefined."""


class UndefinedCorrelationError(NumericalError):
    """Correlation is undefined because one ranking is constant."""
