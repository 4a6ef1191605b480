"""Exception types shared across the package.

All of them subclass ``ValueError`` so callers that only care about
"bad input" can catch one thing.
"""


class HelpFusionError(ValueError):
    """Base class for data and argument problems raised by this package."""


class DataFormatError(HelpFusionError):
    """A file could not be parsed; the message names the file and field."""


class ValidationError(HelpFusionError):
    """Input parsed fine but violates an invariant (counts, ranges, order)."""


class DegenerateDataError(HelpFusionError):
    """Training data cannot support the requested learner (e.g. one class)."""


class InfeasibleTargetError(HelpFusionError):
    """A calibration target cannot be realised by the generator."""

    def __init__(self, detector, message):
        super().__init__(f"{detector}: {message}")
        self.detector = detector
