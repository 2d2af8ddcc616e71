"""Exception types shared across the package."""


class AtlasError(Exception):
    """Base class for all package errors."""


# polynomial / root finding

class DegreeZero(AtlasError):
    """Polynomial is constant, no roots to find."""


class NonConvergence(AtlasError):
    """Iteration hit its cap before reaching the requested tolerance."""


class DegenerateFamily(AtlasError):
    """Family coefficient c = a + ib vanishes, all zeros collapse at the origin."""


# path integration / tracing

class ZeroOnPath(AtlasError):
    """An interior sample of an integration path fell inside the exclusion
    radius of a polynomial zero."""


class BranchJump(AtlasError):
    """Square-root branch could not be continued: argument jump >= pi/2
    persisted at the subdivision floor."""


class NotAZero(AtlasError):
    """Requested critical directions at a point that is not a zero."""


class SeedTooCloseToZero(AtlasError):
    """Trace seed lies inside the exclusion radius of a zero."""


# trees

class InvalidLocation(AtlasError):
    """A tree point reference does not lie on the named edge."""


# hyperbolic geometry

class TooFewSamples(AtlasError):
    """Curve has too few samples for finite-difference derivatives."""


class HypothesisViolated(AtlasError):
    """Measured curvature decay does not fit an exponential with positive rate."""


class DegenerateVertices(AtlasError):
    """Ideal polygon has coincident vertices."""


# asymptotic angle system

class NoRoot(AtlasError):
    """Root bracketing failed for the asymptotic angle system."""


class UnsupportedM(AtlasError):
    """Operation is only defined for a specific symmetry order."""


# vortex solver

class NewtonDiverged(AtlasError):
    """Damped Newton iteration failed to reduce the residual."""


class GridTooCoarse(AtlasError):
    """Grid spacing too large to resolve the zero set."""


class OutsideGrid(AtlasError):
    """A trajectory sample left the solved grid region."""


class RegionTooSmall(AtlasError):
    """Marked trajectory construction does not fit inside the solved region."""


class DegenerateMetric(AtlasError):
    """Pullback metric is degenerate (J = 0), development is undefined."""
