"""Exception types shared across the package."""

from __future__ import annotations


class CoalineageError(Exception):
    """Base class for package-specific failures."""


class NumericalConditioningError(CoalineageError):
    """A computation lost too much precision to be trusted.

    Raised when an alternating series cancels below the reliability
    threshold, when a probability mass defect exceeds its tolerance, or
    when an estimator has no finite solution.  ``min_reliable_t``, when
    set, is the smallest time at which the same computation passes the
    conditioning gates (coarse, factor-of-two resolution).
    """

    def __init__(self, message, *, min_reliable_t=None, cancellation_ratio=None):
        super().__init__(message)
        self.min_reliable_t = min_reliable_t
        self.cancellation_ratio = cancellation_ratio


class DataFormatError(CoalineageError):
    """An input data file violates the documented schema."""
