"""Exception hierarchy shared by all storkit modules.

The CLI maps these onto exit codes: InfeasibleError -> 1, InputError and
its subclasses -> 2, InternalError -> 3.
"""


class StorkitError(Exception):
    """Base class for all storkit errors."""


class InputError(StorkitError):
    """Invalid argument, file content, or configuration."""


class DomainError(InputError):
    """A piecewise-linear function was queried or combined outside its domain."""


class SizeLimitError(InputError):
    """An enumeration guard tripped; the requested instance is too large."""


class InfeasibleError(StorkitError):
    """The requested scheduling problem has no feasible solution."""


class InternalError(StorkitError):
    """Numerical invariant broken inside a solver; indicates a bug."""
