"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so library code should raise the most
specific subclass that applies.
"""


class HomkitError(Exception):
    """Base class for all toolkit errors."""

    kind = "error"


class PreconditionError(HomkitError, ValueError):
    """An input violates the documented precondition of an operation."""

    kind = "precondition"


class BudgetExceeded(HomkitError, RuntimeError):
    """An enumeration or search ran past its configured budget."""

    kind = "budget"


class InvalidRotation(PreconditionError):
    """A rotation system is inconsistent with its graph."""

    def __init__(self, vertex: int, message: str):
        super().__init__(f"vertex {vertex}: {message}")
        self.vertex = vertex


class ConsistencyError(HomkitError, ArithmeticError):
    """An internal cross-check failed (this indicates a bug, not bad input)."""

    kind = "consistency"


class ParseError(HomkitError, ValueError):
    """Malformed JSON or an unexpected document shape."""

    kind = "parse"

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class DeadlineExceeded(BudgetExceeded):
    """The wall-clock budget ran out; never absorbed by search fallbacks."""
