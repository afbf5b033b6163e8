"""Exception hierarchy shared by all modules."""


class EMInverseError(Exception):
    """Base class for library errors."""


class DegenerateMedium(EMInverseError):
    """K^2(x) = k^2 + p(x) vanishes (or nearly so) somewhere in the medium."""


class NegativeAbsorption(EMInverseError):
    """Im p(x) < 0 somewhere, i.e. the medium would generate energy."""


class SingularPoint(EMInverseError):
    """Green's function evaluated at coincident points."""


class NonConvergence(EMInverseError):
    """Iterative solver stopped before reaching its residual tolerance."""


class SingularSystem(EMInverseError):
    """Dense factorization of I - T failed."""


class GridTooCoarse(EMInverseError):
    pass


class PointInsideDomain(EMInverseError):
    pass


class PolarizationDegenerate(EMInverseError):
    """Observation direction too close to the polarization vector."""


class InconsistentQuadratures(EMInverseError):
    pass


class ZeroTruth(EMInverseError):
    pass


class ZeroAmplitude(EMInverseError):
    pass


class InstanceTooLarge(EMInverseError):
    """Oracle called on a problem outside its desk-scale size guard."""


class ConfigError(EMInverseError):
    pass
