"""Exception types shared across the package."""


class ErgoscopeError(Exception):
    """Base class for package errors."""


class ModelError(ErgoscopeError):
    """Invalid model definition or parameters."""


class CapacityError(ErgoscopeError):
    """State enumeration ran out of capacity before closing a level."""

    def __init__(self, message, first_unclosed_level=None):
        super().__init__(message)
        self.first_unclosed_level = first_unclosed_level


class NumericsError(ErgoscopeError):
    """A numerical procedure failed (singular system, overflow, budget)."""


class BudgetExhausted(NumericsError):
    """A search exhausted its truncation/iteration budget.

    Distinct from a negative structural answer: partial results are attached.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial
