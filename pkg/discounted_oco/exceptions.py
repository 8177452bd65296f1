"""
Exception hierarchy for discounted-oco.
"""


class DiscountedOCOError(Exception):
    """Base class for every error raised by the package"""


class DomainError(DiscountedOCOError, ValueError):
    """A numeric input lies outside the domain of an operation"""


class UsageError(DiscountedOCOError):
    """An operation was called in a way its contract forbids"""


class ConfigError(DiscountedOCOError, ValueError):
    """An experiment config is invalid or internally inconsistent"""


class InvariantViolation(DiscountedOCOError, AssertionError):
    """A property that holds by construction was observed to fail"""
