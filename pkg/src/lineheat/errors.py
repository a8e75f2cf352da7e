"""Exception types shared across the package.

``exit_code`` drives the CLI: 2 for input/usage problems, 3 for numerical
failures.
"""


class LineHeatError(Exception):
    exit_code = 2


class NumericalError(LineHeatError):
    exit_code = 3


class ZeroLengthEdge(LineHeatError):
    """Edge endpoints coincide (or a self-loop was given)."""


class InteriorIntersection(LineHeatError):
    """Two edges touch or cross somewhere that is not a shared endpoint vertex."""


class DanglingReference(LineHeatError):
    """Segment references a vertex id that does not exist."""


class LocationOffNetwork(LineHeatError):
    """Edge id out of range or offset outside [0, edge length]."""


class TooFarFromNetwork(LineHeatError):
    """Planar point farther from every edge than the allowed snap distance."""


class ParseError(LineHeatError):
    """Malformed input file."""


class GeometryTypeError(ParseError):
    """GeoJSON feature with a geometry type the reader does not accept."""


class AllPointsTooFar(LineHeatError):
    """Every input record was dropped by the snap-distance filter."""


class EmptyPattern(LineHeatError):
    """Estimator requires at least one data point."""


class UnboundedKernel(LineHeatError):
    """Path-enumeration estimators need a compactly supported kernel family."""


class PathExplosion(NumericalError):
    """Path enumeration exceeded the step budget; lower the bandwidth or raise the cap."""


class StabilityViolation(NumericalError):
    """Requested time step exceeds the explicit-scheme stability bound."""


class OverlappingSubsets(LineHeatError):
    """Batched subsets must be disjoint."""


class BadDelta(LineHeatError):
    """Quantile step must satisfy: 1/delta is an integer in [1, n]."""


class LatticeMismatch(LineHeatError):
    """Operation requires both functions on the same lattice."""


class OutOfDomain(LineHeatError):
    """Network node falls outside the simulation domain (unit square)."""


class CholeskyFailure(NumericalError):
    """Covariance matrix not positive definite even after jitter."""


class NonpositivePilotWarning(UserWarning):
    """Pilot intensity at a data point was at or below the floor and was clamped."""
