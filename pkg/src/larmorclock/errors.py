"""Exception hierarchy shared by all pipeline stages.

The CLI maps these onto exit codes: ConfigError -> 2, RegimeError -> 3,
NumericsError -> 4.
"""


class LarmorClockError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(LarmorClockError):
    """Invalid, inconsistent, or unknown configuration input."""


class RegimeError(LarmorClockError):
    """The requested computation is outside its validity regime."""


class NumericsError(LarmorClockError):
    """A numeric procedure failed or its guard was violated."""


class UnsupportedRegimeError(RegimeError):
    """Turning-point dominated configuration; construction refused."""


class DegenerateMappingError(RegimeError):
    """A change of variables collapsed (e.g. zero Larmor rate)."""


class AlreadyPastError(RegimeError):
    """Initial position at or beyond the arrival threshold."""


class GridTooSmallError(NumericsError):
    """Too much probability mass touches the grid boundary."""

    def __init__(self, msg, suggested_halfwidth=None):
        super().__init__(msg)
        self.suggested_halfwidth = suggested_halfwidth


class OutOfDomainError(NumericsError):
    """Evaluation requested outside the stored grid."""


class PhaseUndefinedError(NumericsError):
    """Phase requested at a density node."""


class NodeCrossingError(NumericsError):
    """A trajectory entered a density node during integration."""

    def __init__(self, msg, indices=()):
        super().__init__(msg)
        self.indices = tuple(indices)


class CoverageError(NumericsError):
    """A distribution's support truncates more mass than allowed."""


class NumericalDegeneracyError(NumericsError):
    """An analytically impossible degeneracy was hit numerically."""
