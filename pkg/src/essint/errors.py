"""Exception hierarchy shared by all modules."""


class EssintError(Exception):
    """Base class for every error raised by this package."""


class EmptySet(EssintError):
    pass


class NotMember(EssintError):
    pass


class DimensionTooLarge(EssintError):
    pass


class BadRange(EssintError, ValueError):
    pass


class SelectionBlowup(EssintError):
    pass


class PreconditionFailed(EssintError):
    pass


class NonoverlapFailed(PreconditionFailed):
    pass


class DegenerateZeroDual(EssintError):
    pass


class NoStabilization(EssintError):
    pass


class QualificationFailed(EssintError):
    pass


class Infeasible(EssintError):
    pass


class GradientVanishes(EssintError):
    pass


class InactiveScreenFailed(UserWarning):
    """Warning: the node-level interiority screen for inactive constraints failed."""
