"""Exception types raised across the package."""


class NarrowNetError(Exception):
    """Base class for all package errors."""


class DimensionError(NarrowNetError, ValueError):
    """Operand dimensions do not agree."""


class ValidationError(NarrowNetError, ValueError):
    """A value or document violates a structural invariant."""


class ParseError(ValidationError):
    """A serialized document is malformed."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class ClampingError(NarrowNetError, ValueError):
    """A ReLU stage would clamp a negative value the caller wants preserved."""


class BudgetError(NarrowNetError):
    """A construction would exceed a configured resource budget."""
