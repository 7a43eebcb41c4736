"""
Exception hierarchy shared by all pyferry modules.
"""
from typing import Optional

__all__ = [
    "FerryError",
    "ValidationError",
    "PreconditionError",
    "ConfigError",
    "EngineError",
]


class FerryError(Exception):
    " Base class for every error raised by pyferry. "


class ValidationError(FerryError, ValueError):
    """
    A value does not satisfy the invariants of its type (negative distance,
    malformed allocation, N > 2K, dimension mismatch, ...).
    """


class PreconditionError(FerryError, ValueError):
    """
    The arguments are well formed, but the mathematics is not defined for
    them (for instance d/(vT) >= 1, or an arrival rate beyond lambda_max).
    """


class ConfigError(FerryError):
    """
    A configuration document could not be parsed or validated.
    """

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        line: Optional[int] = None,
        column: Optional[int] = None,
        field: Optional[str] = None,
    ) -> None:
        self.message = message
        self.path = path
        self.line = line
        self.column = column
        self.field = field
        super().__init__(str(self))

    def __str__(self) -> str:
        where = []
        if self.path:
            where.append(self.path)
        if self.line is not None:
            where.append("line %d" % self.line)
            if self.column is not None:
                where.append("column %d" % self.column)
        prefix = ", ".join(where)
        if self.field:
            prefix = "%s: %s" % (prefix, self.field) if prefix else self.field
        return "%s: %s" % (prefix, self.message) if prefix else self.message


class EngineError(FerryError):
    " A simulation invariant (conservation, nonnegativity) was violated. "
