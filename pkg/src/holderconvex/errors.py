"""Exception hierarchy shared by every module."""

from __future__ import annotations


class HolderConvexError(Exception):
    """Base class for all package errors."""


class IrrationalInExactMode(HolderConvexError, ArithmeticError):
    pass


class NegativeBase(HolderConvexError, ValueError):
    pass


class Undecidable(HolderConvexError, ArithmeticError):
    """A guarded comparison whose intervals overlap."""


class InvalidParams(HolderConvexError, ValueError):
    pass


class OutOfDomain(HolderConvexError, ValueError):
    pass


class DepthLimitExceeded(HolderConvexError):
    pass


class PrecisionUnreachable(HolderConvexError):
    """The configured depth limit was reached before the error target."""


class DegenerateGap(HolderConvexError, ValueError):
    pass


class EnumerationBudgetExceeded(HolderConvexError):
    pass


class InsufficientRows(HolderConvexError, ValueError):
    pass


class CapExceeded(HolderConvexError, ValueError):
    pass


class RootNotBracketed(HolderConvexError):
    pass


class OscillationViolation(HolderConvexError, AssertionError):
    """An oscillation inequality failed; carries the block index and margin."""

    def __init__(self, j: int, margin, message: str = ""):
        super().__init__(message or f"oscillation inequality fails at j={j} (margin {margin})")
        self.j = j
        self.margin = margin
