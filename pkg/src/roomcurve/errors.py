"""Exception hierarchy shared by all roomcurve modules."""


class RoomCurveError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(RoomCurveError, ValueError):
    """Argument violates a documented precondition."""


class InsufficientDecay(RoomCurveError):
    """Energy decay curve does not span the regression interval."""


class DegenerateDistribution(RoomCurveError):
    """Feature values have zero variance; thresholds cannot be fitted."""


class SingularSystem(RoomCurveError):
    """Normal equations are singular and no regularization was given."""


class EmptyGroup(RoomCurveError):
    """A local subgroup received no training records."""

    def __init__(self, group, message=None):
        self.group = group
        super().__init__(message or f"local group {group} is empty")


class VersionError(RoomCurveError):
    """File was written by a newer format version than this reader."""
