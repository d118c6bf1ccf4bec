"""Exception types raised across the package."""


class LeadError(Exception):
    """Base class for all package errors."""


class DataError(LeadError):
    """Bad or inconsistent input data (CLI exit code 3)."""


class ConfigError(LeadError):
    """Invalid run configuration (CLI exit code 2)."""


class EmptyMask(DataError):
    pass


class OutOfBounds(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class ZeroMedian(DataError):
    pass


class DegenerateRect(DataError):
    pass


class EmptyDistribution(DataError):
    pass


class OracleUnavailable(ConfigError):
    pass


class NonPositiveScale(DataError):
    pass


class EmptyOverlap(DataError):
    pass


class ScoreOutOfRange(DataError):
    pass


class MissingPartial(DataError):
    pass


class NonPositiveDepth(DataError):
    pass


class BadFormat(DataError):
    pass


class BitDepthMismatch(BadFormat):
    pass


class DegenerateRegion(DataError):
    pass


class NoIntersection(DataError):
    pass
