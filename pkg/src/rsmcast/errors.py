"""Exception types raised by the library."""


class EmptyGroupsError(ValueError):
    """A group size list is empty or contains a non-positive entry."""


class AlphaOutOfRangeError(ValueError):
    """Power-split ratio outside the supported open interval."""


class DimensionMismatchError(ValueError):
    """Channel, precoder, or layout dimensions are inconsistent."""


class LengthMismatchError(ValueError):
    """A rate list does not match the number of groups or users."""


class NonPositiveMseError(ValueError):
    """MSE values must be strictly positive to invert into weights."""


class NonPositiveWeightError(ValueError):
    """WMSE weights must be strictly positive."""


class SchemeHasNoAlphaError(ValueError):
    """The requested operation needs a power split, but the scheme has none."""


class GridTooLargeError(ValueError):
    """Exhaustive-search oracle called outside its tractable problem sizes."""


class AllInfeasibleError(RuntimeError):
    """Every candidate in a power-split search was infeasible."""
