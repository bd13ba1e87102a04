"""Exception hierarchy shared across the package."""


class PicardCCError(Exception):
    """Base class for all errors raised by this package."""


class ContextMismatch(PicardCCError):
    pass


class DivisionByZeroPrecision(PicardCCError):
    """Division by an element that is zero to the available precision."""


class NoCubeRoot(PicardCCError):
    pass


class NotSimpleRoot(PicardCCError):
    pass


class NoRootsGuaranteed(PicardCCError):
    """Constant term has negative valuation: the series has no zeros on the disk."""


class CurveValidationError(PicardCCError):
    pass


class NotMonic(CurveValidationError):
    pass


class WrongDegree(CurveValidationError):
    pass


class NotSquarefree(CurveValidationError):
    pass


class WrongDisk(PicardCCError):
    pass


class NotSameDisk(PicardCCError):
    pass


class PoleInDisk(PicardCCError):
    pass


class NotSplit(PicardCCError):
    pass


class BadYRule(PicardCCError):
    pass


class DegenerateDivisor(PicardCCError):
    pass


class ComputationFailure(PicardCCError):
    """Failure states of the pipeline that callers may retry around."""

    reason = "failure"


class PrecisionExhausted(ComputationFailure):
    reason = "precision-exhausted"


class DoubleRoot(ComputationFailure):
    reason = "double-root"


class IncreaseE(ComputationFailure):
    reason = "increase-e"
