"""
Exception hierarchy for the harmonic ball laboratory
"""

from typing import Optional


class HarmonicLabError(Exception):
    """Base class for every error raised by the package"""


class ConfigError(HarmonicLabError):
    """Scenario configuration could not be read or validated"""


class GeometryError(HarmonicLabError):
    """Domain geometry is incompatible with the grid"""


class GeometryOutOfBounds(GeometryError):
    """Geometry does not fit strictly inside the grid box"""


class InvalidGeometry(GeometryError):
    """Geometry is malformed (e.g. a self-intersecting polygon)"""


class DisconnectedDomain(GeometryError):
    """The interior node set is empty or not 4-connected"""


class GridMismatch(HarmonicLabError):
    """Two grid objects that must share a grid do not"""


class CoincidentPoints(HarmonicLabError):
    """A kernel was evaluated at coincident points"""


class SolverError(HarmonicLabError):
    """Base class for numerical solver failures"""


class NonConvergence(SolverError):
    """Iteration budget exhausted before the residual target was met"""

    def __init__(self, message: str, iterations: int = 0, residual: Optional[float] = None):
        super().__init__(message)
        self.iterations = iterations
        self.residual = residual


class SupportTouchesBoundary(SolverError):
    """Measure support lies closer than 2h to the boundary of K"""


class SourceTooCloseToBoundary(SolverError):
    """Green source lies closer than 2h to the boundary of K"""


class BoxTooSmall(SolverError):
    """Solution reaches the margin strip of the grid box"""


class MarginTooSmall(SolverError):
    """Region is too close to the grid box for the expected growth"""


class CenterOutsideRegion(HarmonicLabError):
    """Starshapedness centre is not a member of the region"""


class VerificationInputError(HarmonicLabError):
    """Inputs of a verification operation violate its preconditions"""


class ProbeInsideBall(VerificationInputError):
    """Probe lies inside the ball or within 3h of its closure"""


class ProbeTooCloseToBoundary(VerificationInputError):
    """Probe lies within 3h of the boundary of K"""


class IncomparableInputs(VerificationInputError):
    """Two balls cannot be ordered by size or by domain"""


class DomainNotStarshaped(VerificationInputError):
    """K is not starshaped with respect to the ball centre"""


class WrongDomainKind(VerificationInputError):
    """Operation requires a different kind of domain"""


class EmptyInterface(VerificationInputError):
    """Two-phase interface is empty"""


def exit_code_for(error: BaseException) -> int:
    """CLI exit code: 3 for non-convergence, 2 for every other engineering failure"""
    if isinstance(error, NonConvergence):
        return 3
    return 2
