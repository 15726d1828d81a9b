"""Exception types shared by every module."""


class BccError(Exception):
    """Base class for all errors raised by bcclab."""


class ValidationError(BccError, ValueError):
    """Malformed input: bad dimensions, non-normalized distributions, bad JSON."""


class DimensionError(ValidationError):
    """Alphabet sizes of chained objects do not agree."""


class BudgetError(BccError, RuntimeError):
    """An enumeration or memory guard would be exceeded."""
