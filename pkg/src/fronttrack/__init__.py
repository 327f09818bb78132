"""Front tracking and relative-entropy stability diagnostics for 2x2 systems of conservation laws."""
from .errors import ConfigError, DomainError, FrontTrackError, InternalError, NumericalError, RangeError
from .system import IsentropicEuler, State, StateBox, SystemParams

__all__ = [
    "ConfigError", "DomainError", "FrontTrackError", "InternalError", "NumericalError", "RangeError",
    "IsentropicEuler", "State", "StateBox", "SystemParams",
]
