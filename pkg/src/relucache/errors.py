"""Exception types shared across the package."""


class ReluCacheError(Exception):
    """Base class for all errors raised by relucache."""


class ParameterError(ReluCacheError, ValueError):
    """An argument is outside the range an operation accepts."""


class DomainError(ParameterError):
    """An evaluation point lies outside [0, 1]."""


class ConstructionError(ReluCacheError):
    """A requested object cannot be realized under its invariants."""


class InvariantError(ReluCacheError, ValueError):
    """A value violates the invariants of its type."""


class AssignmentError(ReluCacheError):
    """Cache assignment failed on a specific interval."""

    def __init__(self, message: str, interval: int | None = None):
        super().__init__(message)
        self.interval = interval


class StructureError(ReluCacheError, ValueError):
    """A network has inconsistent layer widths or malformed units."""


class InfeasibleBudget(ParameterError):
    """The depth budget cannot host the construction."""

    def __init__(self, message: str, n_min: int | None = None):
        super().__init__(message)
        self.n_min = n_min
