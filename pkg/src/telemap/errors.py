"""Exception hierarchy shared across the package."""


class TelemapError(Exception):
    """Base class for all package-specific errors."""


class ScenarioError(TelemapError):
    """A scenario or correspondence failed validation."""


class ScenarioFormatError(ScenarioError):
    """A scenario document could not be parsed."""


class NumericalError(TelemapError):
    """A numerical routine failed (non-convergence, singular system, ...)."""


class TrainingError(NumericalError):
    """Training diverged; carries the epoch at which it happened."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch
