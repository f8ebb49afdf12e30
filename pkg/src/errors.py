"""
Exception hierarchy for two-price equilibrium computations.

Every error raised by the library derives from ``TwoPriceError`` and carries
the process exit status the command-line front end reports for it.
"""

from typing import Any, Optional


class TwoPriceError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class InvalidValuation(TwoPriceError, ValueError):
    """A valuation violates normalization, monotonicity or shape rules."""

    exit_code = 3


class MalformedInput(TwoPriceError, ValueError):
    """An input document or argument cannot be interpreted."""

    exit_code = 3


class DimensionMismatch(TwoPriceError, ValueError):
    """Prices, bids or allocations do not match the market dimensions."""

    exit_code = 3


class CountMismatch(TwoPriceError, ValueError):
    """Bundle counts do not sum to the number of items."""

    exit_code = 3


class IndexOutOfRange(TwoPriceError, ValueError):
    """A slope query or search window lies outside the valuation domain."""

    exit_code = 3


class UnknownInstance(TwoPriceError, ValueError):
    """No built-in instance or fixture has the requested name."""

    exit_code = 3


class UnsupportedClass(TwoPriceError, ValueError):
    """The requested valuation class has no generator."""

    exit_code = 3


class PriceOrderViolation(TwoPriceError, ValueError):
    """Some item has a high price below its low price, or a negative price."""

    exit_code = 3


class InstanceTooLarge(TwoPriceError):
    """The operation would enumerate more bundles or splits than allowed."""

    exit_code = 4


class NotSubadditive(TwoPriceError):
    """An operation requiring subadditive valuations received another kind."""


class NotXOS(TwoPriceError):
    """Supporting prices do not exist for the requested bundle."""


class ZeroWelfare(TwoPriceError):
    """Discrepancy is undefined because the allocation has zero welfare."""


class NotAnEquilibrium(TwoPriceError):
    """
    An input that must be an equilibrium is not one.

    Attributes:
        report: The failing ``EquilibriumReport`` (with its witness), if any
    """

    exit_code = 2

    def __init__(self, message: str, report: Optional[Any] = None):
        super().__init__(message)
        self.report = report


class NoPairFound(TwoPriceError):
    """
    No good pair exists in the scanned window.

    The allocation algorithms only search windows where a pair is guaranteed,
    so this error always indicates a bug. The scanned slope table is attached.

    Attributes:
        slope_table: Rows of (l_x, forward slope of x, l_y, forward slope of y)
    """

    def __init__(self, message: str, slope_table: Optional[list] = None):
        super().__init__(message)
        self.slope_table = slope_table or []


class FixtureFailed(TwoPriceError):
    """
    A reproduced fixture disagrees with its expected value.

    Attributes:
        cell: Identifier of the first mismatching cell
        expected: Expected value
        actual: Computed value
    """

    exit_code = 2

    def __init__(self, cell: str, expected: Any, actual: Any):
        super().__init__(f"fixture mismatch at {cell}: expected {expected}, got {actual}")
        self.cell = cell
        self.expected = expected
        self.actual = actual
