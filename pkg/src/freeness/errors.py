"""Exception hierarchy shared by all modules."""


class FreenessError(Exception):
    """Base class for every error raised by this package."""


class NotHermitianError(FreenessError, ValueError):
    pass


class EigenvalueOutOfRangeError(FreenessError, ValueError):
    pass


class NotOrthonormalError(FreenessError, ValueError):
    pass


class NotUnitaryError(FreenessError, ValueError):
    pass


class DimensionMismatchError(FreenessError, ValueError):
    pass


class MuAboveSpectrumError(FreenessError, ValueError):
    pass


class EmptyRegionError(FreenessError, ValueError):
    pass


class IndexOutOfRangeError(FreenessError, IndexError):
    pass


class RegionsOverlapError(FreenessError, ValueError):
    pass


class DuplicateSiteForFermiError(FreenessError, ValueError):
    pass


class WrongStatisticsError(FreenessError, ValueError):
    pass


class TooLargeError(FreenessError, ValueError):
    pass


class TooManySitesError(FreenessError, ValueError):
    pass


class SectorMismatchError(FreenessError, ValueError):
    pass


class BoseRotationUnsupportedError(FreenessError, NotImplementedError):
    pass


class FactorizationFailureError(FreenessError, ArithmeticError):
    pass


class TooFewSamplesError(FreenessError, ValueError):
    pass


class RegionParseError(FreenessError, ValueError):
    pass


class InternalConsistencyError(FreenessError, AssertionError):
    """Two routes to the same exact quantity disagreed."""
