"""Exception hierarchy shared by every framelab module."""


class FramelabError(Exception):
    """Base class for all framelab failures."""


class UnsupportedManifold(FramelabError):
    pass


class UnsupportedDimension(FramelabError):
    pass


class DegenerateFraming(FramelabError):
    pass


class InvalidStep(FramelabError):
    pass


class NotInvertible(FramelabError):
    pass


class NotProportional(FramelabError):
    pass


class NotRealDiagonalizable(FramelabError):
    pass


class NotPartiallyHyperbolic(FramelabError):
    pass


class NotUnimodular(FramelabError):
    pass


class NotALieAlgebra(FramelabError):
    pass


class ForbiddenAlgebraicGroup(FramelabError):
    """A constant-coefficient partially hyperbolic framing resolved to su(2) or euc(2).

    Neither group carries a partially hyperbolic affine map, so this signals
    wrong numerical structure constants rather than a new case.
    """


class UnclassifiedAlgebra(FramelabError):
    pass


class LatticeNotPreserved(FramelabError):
    pass


class NotHyperbolicMonodromy(FramelabError):
    pass


class NotCommuting(FramelabError):
    pass


class NotContracting(FramelabError):
    pass


class InsufficientResolution(FramelabError):
    pass


class NotADiffeomorphism(FramelabError):
    pass


class NotAutonomous(FramelabError):
    pass


class NotFiberPreserving(FramelabError):
    pass


class NotLocalDiffeo(FramelabError):
    pass


class ConfigError(FramelabError):
    pass


class NotInReport(FramelabError):
    pass
