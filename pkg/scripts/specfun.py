"""
Scalar special functions for the open KPZ numerics toolkit.

Gamma-function quantities are taken from scipy.special and kept in log
space; the modified Bessel function of imaginary order K_{iu}(z) is
computed here, by its ascending series where that is well conditioned and
by panelled Gauss-Legendre quadrature of

    K_{iu}(z) = int_0^inf exp(-z cosh w) cos(u w) dw

everywhere else.

Supported box for K_{iu}: z in [1e-8, 700], |u| <= 60.
"""

import math
import logging

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special

from errors import DomainError, PoleError, NonConvergenceError

logger = logging.getLogger(__name__)


POLE_TOL = 1e-12

K_Z_MIN = 1e-8
K_Z_MAX = 700.0
K_U_MAX = 60.0

I_R_MAX = 100.0
I_LAMBDA_MAX = 50.0

# K_{iu} quadrature: truncate where z*(cosh W - 1) reaches this many e-folds
K_TRUNCATION = 60.0
K_ORDER = 16
SERIES_MAX_TERMS = 2000

_GL_X, _GL_W = leggauss(K_ORDER)
_LOG_MU_PREFACTOR = math.log(2.0 / math.pi ** 2)


def _check_finite(z):
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise DomainError(f"non-finite argument: {z}")
    return z


def _check_poles(z):
    z = _check_finite(z)
    n = np.round(z.real)
    near = (n <= 0) & (np.abs(z - n) <= POLE_TOL)
    if np.any(near):
        bad = np.atleast_1d(z)[np.atleast_1d(near)][0]
        raise PoleError(f"Gamma pole at z={bad}")
    return z


def _scalar_or_array(value, like):
    if np.ndim(like) == 0:
        return float(value) if np.isrealobj(value) else complex(value)
    return value


def log_sinh(x):
    """log(sinh x) for x > 0 without overflow."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide='ignore'):
        return x + np.log(-np.expm1(-2.0 * x)) - math.log(2.0)


def log_gamma(z):
    """Principal branch of log Gamma(z).

    Args:
        z: real or complex scalar (or array)

    Returns:
        complex log Gamma(z)

    Raises:
        PoleError: z within 1e-12 of 0, -1, -2, ...
        DomainError: non-finite input
    """
    z = _check_poles(z)
    return _scalar_or_array(special.loggamma(z), z)


def log_gamma_abs2(z):
    """log |Gamma(z)|^2, vectorized.

    Purely imaginary arguments use |Gamma(iu)|^2 = pi / (u sinh(pi u)).
    """
    z = _check_poles(z)
    out = 2.0 * special.loggamma(z).real
    on_axis = z.real == 0.0
    if np.any(on_axis):
        u = np.where(on_axis, np.abs(z.imag), 1.0)
        exact = math.log(math.pi) - np.log(u) - log_sinh(math.pi * u)
        out = np.where(on_axis, exact, out)
    return _scalar_or_array(out, z)


def gamma_abs2(z):
    """|Gamma(z)|^2 as a real number."""
    return float(np.exp(log_gamma_abs2(complex(_check_finite(z)))))


def log_gamma_prod_abs2(*zs):
    """Sum of log |Gamma(z_j)|^2 over the factors; arguments broadcast."""
    total = 0.0
    for z in zs:
        total = total + log_gamma_abs2(z)
    return total


def gamma_prod_abs2(zs):
    """prod_j |Gamma(z_j)|^2, accumulated in log space.

    Args:
        zs: iterable of complex scalars

    Returns:
        float
    """
    zs = list(zs)
    if not zs:
        return 1.0
    return float(np.exp(log_gamma_prod_abs2(*[complex(z) for z in zs])))


def pochhammer(a, n):
    """Rising factorial (a)_n = a (a+1) ... (a+n-1); (a)_0 = 1.

    Works with any numeric type supporting + and *, including Fraction.
    """
    if isinstance(n, bool) or int(n) != n or n < 0:
        raise DomainError(f"pochhammer needs a nonnegative integer n, got {n!r}")
    result = 1
    for k in range(int(n)):
        result = result * (a + k)
    return result


def log_mu_density(u):
    """log of the spectral density (2/pi^2) u sinh(pi u), u > 0."""
    u = np.asarray(u, dtype=float)
    with np.errstate(divide='ignore'):
        out = _LOG_MU_PREFACTOR + np.log(u) + log_sinh(math.pi * u)
    return float(out) if out.ndim == 0 else out


def mu_density(u):
    """Spectral density mu(du)/du = (2/pi^2) u sinh(pi u).

    Accepts scalars or arrays; u = 0 gives 0.

    Raises:
        DomainError: for negative u
    """
    arr = np.asarray(u, dtype=float)
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise DomainError("mu_density needs finite u >= 0")
    small = arr < 200.0
    direct = (2.0 / math.pi ** 2) * arr * np.sinh(math.pi * np.where(small, arr, 0.0))
    if np.all(small):
        out = direct
    else:
        with np.errstate(divide='ignore'):
            out = np.where(small, direct, np.exp(log_mu_density(np.where(small, 1.0, arr))))
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Modified Bessel function of imaginary order
# ---------------------------------------------------------------------------

def _check_k_domain(u_max, z_min, z_max):
    # exp(log(K_Z_MIN)) may round just below K_Z_MIN
    if not (K_Z_MIN * (1.0 - 1e-12) <= z_min and z_max <= K_Z_MAX * (1.0 + 1e-12)):
        raise DomainError(
            f"K_iu(z) supported for z in [{K_Z_MIN:g}, {K_Z_MAX:g}], got [{z_min:g}, {z_max:g}]")
    if u_max > K_U_MAX:
        raise DomainError(f"K_iu(z) supported for |u| <= {K_U_MAX:g}, got {u_max:g}")


def _k_series(u, z):
    """K_{iu}(z) = -pi Im I_{iu}(z) / sinh(pi u) from the ascending series of I_{iu}."""
    q = 0.25 * z * z
    term = np.exp(1j * u * math.log(0.5 * z) - special.loggamma(1.0 + 1j * u))
    total = term.copy()
    for k in range(1, SERIES_MAX_TERMS + 1):
        term = term * (q / (k * (k + 1j * u)))
        total = total + term
        if k * k >= q and np.all(np.abs(term) <= 1e-18 * np.abs(total)):
            break
    else:
        raise NonConvergenceError(f"K_iu series did not converge at z={z:g}")
    return -math.pi * total.imag / np.sinh(math.pi * u)


def _k_quadrature(u, z):
    """Composite Gauss-Legendre on [0, W] for a batch of orders at one z."""
    width = math.acosh(1.0 + K_TRUNCATION / z)
    u_top = float(np.max(u)) if u.size else 0.0
    panel = min(1.0, math.pi / (4.0 * max(u_top, 1.0)), 1.0 / math.sqrt(z))
    n_panels = max(1, int(math.ceil(width / panel)))
    edges = np.linspace(0.0, width, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    w = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    weights = (half[:, None] * _GL_W[None, :]).ravel()
    # exp(-z cosh w) = exp(-z) exp(-2 z sinh^2(w/2))
    f = np.exp(-2.0 * z * np.sinh(0.5 * w) ** 2) * weights
    return (np.cos(np.outer(u, w)) @ f) * math.exp(-z)


def _k_row(u, z):
    u = np.abs(np.asarray(u, dtype=float))
    out = np.empty_like(u)
    series = (u >= 0.5) & (z <= np.maximum(2.0, u))
    if np.any(series):
        out[series] = _k_series(u[series], z)
    rest = ~series
    if np.any(rest):
        out[rest] = _k_quadrature(u[rest], z)
    return out


def bessel_k_imag(u, z):
    """Modified Bessel function of imaginary order, K_{iu}(z).

    Real-valued and even in u. The accuracy is relative 1e-9 across most of
    the box; near the turning point z ~ u with u large the value is tiny and
    the error is absolute (about 1e-16 exp(-z)).

    Args:
        u: real order (sign ignored), |u| <= 60
        z: argument in [1e-8, 700]

    Returns:
        float

    Raises:
        DomainError: outside the supported box
    """
    u = abs(float(u))
    z = float(z)
    if not (math.isfinite(u) and math.isfinite(z)):
        raise DomainError("bessel_k_imag needs finite arguments")
    _check_k_domain(u, z, z)
    return float(_k_row(np.array([u]), z)[0])


def bessel_k_imag_grid(u, z):
    """Matrix K_{iu_j}(z_i) with rows indexed by z and columns by u.

    Args:
        u: 1-D array of orders
        z: 1-D array of arguments

    Returns:
        ndarray of shape (len(z), len(u))
    """
    u = np.abs(np.atleast_1d(np.asarray(u, dtype=float)))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(z))):
        raise DomainError("bessel_k_imag_grid needs finite arguments")
    _check_k_domain(float(u.max(initial=0.0)), float(z.min()), float(z.max()))
    out = np.empty((z.size, u.size))
    for i, zi in enumerate(z):
        out[i] = _k_row(u, float(zi))
    logger.debug("K grid: %d x %d evaluated", z.size, u.size)
    return out


def k0_upper_bound(x):
    """Upper bound K_0(x) <= K_{1/2}(x) = exp(-x) sqrt(pi/(2x)), valid for x >= 1."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 1.0):
        raise DomainError("k0_upper_bound holds for x >= 1")
    out = np.exp(-x) * np.sqrt(math.pi / (2.0 * x))
    return float(out) if out.ndim == 0 else out


def bessel_k_real(nu, z):
    """K_nu(z) for real order nu; thin wrapper over scipy.special.kv."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0) or not np.all(np.isfinite(z)):
        raise DomainError("bessel_k_real needs finite z > 0")
    out = special.kv(float(nu), z)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Modified Bessel function of the first kind
# ---------------------------------------------------------------------------

def bessel_i(lam, r):
    """I_lambda(r) from the ascending power series.

    All terms are positive, so the sum is well conditioned.

    Args:
        lam: order in (0, 50]
        r: argument in (0, 100]

    Raises:
        DomainError: outside that box
    """
    lam = float(lam)
    r = float(r)
    if not (0.0 < lam <= I_LAMBDA_MAX) or not (0.0 < r <= I_R_MAX):
        raise DomainError(
            f"bessel_i supported for 0 < lambda <= {I_LAMBDA_MAX:g}, 0 < r <= {I_R_MAX:g}")
    q = 0.25 * r * r
    term = math.exp(lam * math.log(0.5 * r) - math.lgamma(lam + 1.0))
    total = term
    for k in range(1, SERIES_MAX_TERMS + 1):
        term *= q / (k * (k + lam))
        total += term
        if k * k >= q and term <= 1e-17 * total:
            return total
    raise NonConvergenceError(f"I_lambda series did not converge at r={r:g}")
