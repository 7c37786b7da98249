"""
Exception hierarchy for the GTARE solver.

Every error carries an ``exit_code`` used by the command-line front end:
1 for bad input, 2 for solver failures. Certificate rejection (exit 3) is not
an exception; it is reported through ``CertificateReport``.
"""

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_SOLVER = 2
EXIT_CERTIFICATE_REJECTED = 3


class GtareError(Exception):
    """Base class for all solver and input errors."""

    exit_code = EXIT_SOLVER

    @property
    def name(self) -> str:
        return type(self).__name__


# Input errors

class InputError(GtareError):
    exit_code = EXIT_INPUT


class ProblemFileError(InputError):
    """A problem/matrix file could not be read or parsed."""


class InvalidProblem(InputError):
    """The problem failed validation; the message lists the diagnostics."""


class NonTriangularLength(InputError):
    """A vector handed to unsvec has a length that is not n(n+1)/2."""


class AsymmetricMatrix(InputError):
    """A matrix expected to be symmetric is not, beyond tolerance."""


class ShapeMismatch(InputError):
    pass


class UnsupportedRankDeficientR(InputError):
    """R(0) is singular; the range-condition form of the GTARE is not supported."""


class UnsupportedShape(InputError):
    """The problem has no minimizer channel (m2 = 0)."""


class InvalidSimConfig(InputError):
    pass


# Solver errors

class SingularMatrix(GtareError):
    pass


class IllConditioned(GtareError):
    """Raised only when the configuration asks for it; otherwise logged."""


class SingularRP(GtareError):
    pass


class SingularR22(GtareError):
    pass


class SingularLyapunov(GtareError):
    """The Lyapunov operator is singular (system on the stability boundary)."""


class IndefiniteWeight(GtareError):
    """The quadratic weight of a definite ARE does not have the declared sign."""


class StabilizerNotFound(GtareError):
    pass


class OrientationLost(GtareError):
    pass


class MaxItersExceeded(GtareError):
    pass


class NegativeConstantTerm(GtareError):
    pass


class DomainExit(GtareError):
    """An outer iterate left Dom G."""


class NotInDomain(GtareError):
    """P = 0 is not in Dom G, so the iteration cannot start."""


class MaxOuterExceeded(GtareError):
    pass


class UnstableSolution(GtareError):
    """The converged closed loop failed the mean-square stability test."""


class NonFinite(GtareError):
    pass
