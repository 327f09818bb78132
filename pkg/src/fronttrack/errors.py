"""Exception hierarchy shared by all modules."""


class FrontTrackError(Exception):
    """Base class for every error raised by the package."""


class DomainError(FrontTrackError, ValueError):
    """A state lies outside the set on which an operation is defined."""


class RangeError(FrontTrackError, ValueError):
    """A wave curve or path left the admissible region."""


class NumericalError(FrontTrackError, ArithmeticError):
    """An iterative solver failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message if residual is None else f"{message} (residual={residual:.3e})")
        self.residual = residual


class ConfigError(FrontTrackError, ValueError):
    """Invalid run configuration or violated precondition."""


class InternalError(FrontTrackError, AssertionError):
    """An invariant that should be impossible to break was broken."""
