"""Exception hierarchy.

Two broad families matter for the CLI exit code: ConfigError (exit 2,
bad inputs) and NumericError (exit 3, a computation could not reach its
stated accuracy or left its domain).
"""


class CirSqrtError(Exception):
    """Base class for all package errors."""


class ConfigError(CirSqrtError):
    """Invalid parameters, grids or experiment configuration."""


class NonPositiveA(ConfigError):
    pass


class NonPositiveSigma(ConfigError):
    pass


class NegativeX0(ConfigError):
    pass


class InvalidDelta(ConfigError):
    pass


class LadderNotDecreasing(ConfigError):
    pass


class ConfigInvalid(ConfigError):
    pass


class GridMismatch(ConfigError):
    pass


class NonUniformGrid(ConfigError):
    """Estimators require the uniform default grid."""


class EmptyPath(ConfigError):
    pass


class BinCoverage(ConfigError):
    pass


class NegativeValue(CirSqrtError):
    """A path that must be nonnegative carries a negative value."""


class NumericError(CirSqrtError):
    """A numeric routine failed to reach its accuracy contract."""


class QuadratureFailure(NumericError):
    pass


class BracketFailure(NumericError):
    pass


class DomainError(NumericError):
    pass


class NonFiniteState(NumericError):
    pass


class CdfAccuracy(NumericError):
    pass


class ExtrapolationFailure(NumericError):
    pass


class NoExcursion(CirSqrtError):
    """No excursion above the floor was found (informational)."""


class IoFailure(CirSqrtError):
    pass
