"""Exception types raised across the package."""


class LindPinnError(Exception):
    """Base class for all package errors."""


class NotHermitian(LindPinnError, ValueError):
    pass


class ShapeMismatch(LindPinnError, ValueError):
    pass


class NotScalar(LindPinnError, ValueError):
    pass


class UnsupportedSize(LindPinnError, ValueError):
    pass


class LengthMismatch(LindPinnError, ValueError):
    pass


class DimMismatch(LindPinnError, ValueError):
    pass


class NegativeRate(LindPinnError, ValueError):
    pass


class BadSite(LindPinnError, ValueError):
    pass


class NotState(LindPinnError, ValueError):
    pass


class StepTooLarge(LindPinnError, RuntimeError):
    pass


class LabelUnknown(LindPinnError, KeyError):
    pass


class LineSearchFailed(LindPinnError, RuntimeError):
    pass


class UnknownPreset(LindPinnError, KeyError):
    pass


class ConfigConflict(LindPinnError, ValueError):
    pass


class NonFiniteLoss(LindPinnError, FloatingPointError):
    def __init__(self, epoch, message="loss became non-finite"):
        super().__init__(f"{message} at epoch {epoch}")
        self.epoch = epoch


class CheckpointCorrupt(LindPinnError, ValueError):
    pass
