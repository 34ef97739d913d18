"""Exception hierarchy shared across the package."""


class HsreconError(Exception):
    """Base class for all package errors."""


class UsageError(HsreconError):
    """Invalid argument or call against an API precondition."""


class DimensionError(HsreconError):
    """Shapes of the supplied arrays are inconsistent."""


class DataError(HsreconError):
    """Malformed or non-finite data (files, tensors, measurements)."""
