"""Exception hierarchy shared by the numerical modules."""


class HopflinkError(Exception):
    """Base class for all library errors."""


class ConfigError(HopflinkError, ValueError):
    """Invalid parameters or configuration."""


class DomainError(HopflinkError, ValueError):
    """A point lies outside the computational domain."""


class SingularityError(HopflinkError, ValueError):
    """A kernel was evaluated at coincident points."""


class UnsupportedRepresentation(HopflinkError, TypeError):
    """The operation is not defined for this field representation."""


class NumericalFailure(HopflinkError, RuntimeError):
    """Base class for failures during integration or quadrature."""


class StagnationError(NumericalFailure):
    """Field strength dropped below the stall threshold along a trajectory."""


class DomainExitError(NumericalFailure):
    """A trajectory left a bounded domain."""


class ProximityError(NumericalFailure):
    """Two curves came closer than the exclusion distance.

    Attributes
    ----------
    distance : float
        Closest approach found.
    t1, t2 : float
        Parameters on each curve at the closest approach.
    """

    def __init__(self, message, distance, t1=float("nan"), t2=float("nan")):
        super().__init__(message)
        self.distance = distance
        self.t1 = t1
        self.t2 = t2
