"""Exception types raised across the package."""


class EntropyLabError(Exception):
    """Base class for all package errors."""


class DomainError(EntropyLabError, ValueError):
    """A point, matrix or parameter lies outside the domain of an operation."""


class DivergenceError(EntropyLabError, OverflowError):
    """An orbit left the representable range.

    ``index`` is the first iterate whose coordinates were not representable.
    """

    def __init__(self, index, message=None):
        self.index = index
        super().__init__(message or f"orbit diverged at iterate {index}")


class CoverageError(EntropyLabError):
    """Some witness point is not covered by any (refined) covering element."""

    def __init__(self, point, message=None):
        self.point = point
        super().__init__(message or f"point {point!r} is not covered")


class CapabilityError(EntropyLabError, NotImplementedError):
    """The requested map/partition/measure combination is not supported."""


class ConsistencyError(EntropyLabError):
    """Internal numerical consistency check failed (e.g. masses not summing to 1)."""
