"""Exception types raised by the solver and the experiment layer."""


class MeshfreeError(Exception):
    """Base class for all errors raised by this package."""


class InvalidConfigError(MeshfreeError, ValueError):
    pass


class InsufficientNeighborhoodError(MeshfreeError):
    """Fewer than two usable neighbors around an evaluation point."""


class IllConditionedError(MeshfreeError):
    """Least-squares normal matrix is (numerically) singular."""


class DegenerateFieldError(MeshfreeError):
    pass


class StateBlowupError(MeshfreeError):
    """Non-positive density/temperature or non-finite value during integration."""

    def __init__(self, message, step=None, index=None):
        super().__init__(message)
        self.step = step
        self.index = index


class StabilityViolationError(MeshfreeError):
    pass


class MismatchedFieldsError(MeshfreeError):
    pass


class InsufficientDataError(MeshfreeError):
    pass
