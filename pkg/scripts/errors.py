"""
Exception hierarchy shared by the numerics modules and the command line.

Every error carries an ``exit_code`` so that ``cli.main`` can translate it
without a lookup table:

    2  domain errors (bad parameters, unknown identity, unsupported branch)
    3  non-convergence (quadrature budget exhausted, degenerate weights)
"""


class KpzNumericsError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class DomainError(KpzNumericsError, ValueError):
    """Arguments outside the supported domain of an operation."""

    exit_code = 2


class PoleError(DomainError):
    """Gamma function argument at (or within 1e-12 of) a nonpositive integer."""


class OrderError(DomainError):
    """Time arguments out of order, e.g. s >= t or t >= c."""


class RangeError(DomainError):
    """Parameter outside an admissible range (s outside (-a, c), unproven a, c)."""


class StripError(DomainError):
    """a + c outside the strip (0, 2) required by the Laplace closed form."""


class MethodDomain(DomainError):
    """Evaluation method not valid for the given parameters."""


class RouteDomain(DomainError):
    """psi evaluation route not valid for the given arguments."""


class GridError(DomainError):
    """Malformed time grid (unsorted, missing boundary times, length mismatch)."""


class DimensionError(DomainError):
    """Nested integration requested in more than three dimensions."""


class TailViolation(DomainError):
    """Integrand decays slower than its declared tail policy."""


class UnknownIdentity(DomainError):
    """Identity id not present in the catalog."""


class NonConvergenceError(KpzNumericsError, ArithmeticError):
    """Numerical procedure did not reach the requested tolerance.

    Args:
        message: description of what failed
        result: best available estimate (usually a QuadResult), or None
    """

    exit_code = 3

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class DegenerateWeights(NonConvergenceError):
    """Importance weights collapsed (effective sample size below threshold)."""


class FavardViolation(UserWarning):
    """Recurrence coefficients fail the positivity condition; reported, not raised."""


def exit_code_for(exc):
    """Map an exception to the command-line exit code."""
    if isinstance(exc, KpzNumericsError):
        return exc.exit_code
    if isinstance(exc, NotImplementedError):
        return 2
    return 1
