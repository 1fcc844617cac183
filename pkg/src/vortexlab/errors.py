"""Exception hierarchy shared across the package."""


class VortexLabError(Exception):
    """Base class for all package errors."""


class DomainError(VortexLabError):
    """A point or parameter is incompatible with the spatial domain."""


class ConfigurationError(VortexLabError):
    """A vortex configuration or run configuration is inadmissible."""


class SingularityError(VortexLabError):
    """Evaluation requested exactly at a vortex position."""


class PathError(VortexLabError):
    """An integration path cannot avoid a vortex within tolerance."""


class SolverError(VortexLabError):
    """A linear or nonlinear solve failed; carries the last residual."""

    def __init__(self, message, residual=None, iterate=None):
        super().__init__(message)
        self.residual = residual
        self.iterate = iterate


class BlowupError(VortexLabError):
    """NaN/overflow during time stepping; carries the last finite state."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class TrackingError(VortexLabError):
    """Vortex tracks could not be stitched consistently."""

    def __init__(self, message, events=()):
        super().__init__(message)
        self.events = list(events)
