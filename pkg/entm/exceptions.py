"""Error taxonomy for entm.

Library code raises these; the CLI maps them to exit codes.
"""

from typing import List, Optional


class EntmError(Exception):
    """Base class for all entm errors."""


class NotHermitian(EntmError, ValueError):
    pass


class NotPSD(EntmError, ValueError):
    pass


class NoConvergence(EntmError, RuntimeError):
    pass


class BadIndex(EntmError, ValueError):
    pass


class OutOfRange(EntmError, ValueError):
    pass


class BadSpectrum(EntmError, ValueError):
    pass


class InvalidState(EntmError, ValueError):
    """A matrix or amplitude vector failed the state invariants."""

    def __init__(self, message: str, report: Optional[List[str]] = None):
        super().__init__(message)
        self.report = list(report or [])


class MeasureRangeError(EntmError, ArithmeticError):
    pass


class BudgetExhausted(EntmError, RuntimeError):
    """The REE search ran out of evaluations before converging."""

    def __init__(self, message: str, candidate=None):
        super().__init__(message)
        self.candidate = candidate


class NoRoot(EntmError, RuntimeError):
    pass


class GridMismatch(EntmError, ValueError):
    pass


class EmptyInput(EntmError, ValueError):
    pass


class DeadZone(EntmError, ValueError):
    pass


class NotFound(EntmError, LookupError):
    def __init__(self, message: str, margin: Optional[float] = None):
        super().__init__(message)
        self.margin = margin


class MissingSeed(EntmError, ValueError):
    pass


class AcceptanceViolation(EntmError, AssertionError):
    """A run finished but its result breaks an expected bound or ordering."""
