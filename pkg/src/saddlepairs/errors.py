"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to:
2 config error, 3 surface error, 4 insufficient radius, 5 internal invariant.
"""


class SaddlePairsError(Exception):
    exit_code = 5


class ConfigError(SaddlePairsError, ValueError):
    exit_code = 2


class SurfaceError(SaddlePairsError, ValueError):
    exit_code = 3


class InsufficientRadiusError(SaddlePairsError, ValueError):
    exit_code = 4


class InvariantViolation(SaddlePairsError, AssertionError):
    exit_code = 5


# planar
class ZeroVector(ConfigError):
    pass


class InvalidFiber(ConfigError):
    pass


class NonPositiveTolerance(ConfigError):
    pass


# surface
class NotAPermutation(SurfaceError):
    pass


class NotTransitive(SurfaceError):
    pass


class InvalidGluing(SurfaceError):
    pass


class NotCoprime(ConfigError):
    pass


class NotInSL2Z(ConfigError):
    pass


# enumeration
class RadiusNonPositive(ConfigError):
    pass


class DegenerateNearHit(SurfaceError):
    """A developed vertex lies within the near-hit band of a trajectory."""


# counting / transforms
class RadiusExceedsEnumeration(InsufficientRadiusError):
    pass


class EnumerationRadiusTooSmall(InsufficientRadiusError):
    pass


class SupportNotCovered(InsufficientRadiusError):
    pass


class InsufficientRadii(ConfigError):
    pass


# lattice
class EmptyCusps(ConfigError):
    pass


class NonDescendingLengths(ConfigError):
    pass


# poisson
class NonPositiveParams(ConfigError):
    pass


class OverlappingCells(ConfigError):
    pass
