"""
Integral kernels built from K_{iu}(e^x).

    p_t(x, y)      Yakubovich heat kernel (spectral integral against mu)
    theta(r, t)    Hartman-Watson density, spectral and oscillatory forms
    q~_t(u, v)     kernel of the dual operator K e^{tx} K^{-1}
    q_{s,t}(u, v)  continuous dual Hahn transition density

plus the Kontorovich-Lebedev pair K / K^{-1}, the Mellin transforms of
K_{iu}(e^x) and SpectralCache, which tabulates K_{iu}(e^{x_i}) on one
shared u-grid so that many kernel values come out of a matrix product.
"""

import math
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import special

from errors import DomainError, OrderError, NonConvergenceError
from quad import (
    QuadResult, TailPolicy, integrate_adaptive, integrate_semi_infinite,
    integrate_spectral, require_converged, spectral_cutoff, gauss_legendre_panels,
)
from specfun import (
    K_Z_MIN, K_Z_MAX, K_U_MAX, bessel_k_imag_grid, log_gamma_abs2, log_gamma_prod_abs2,
    mu_density, log_gamma,
)

logger = logging.getLogger(__name__)


DEFAULT_T_MIN = 1e-3
X_MIN = math.log(K_Z_MIN)
X_MAX = math.log(K_Z_MAX)

# Contour shift used for the |K_{iu}(z)| <= exp(-u (pi/2 - delta)) K_0(z sin delta) envelope
ENVELOPE_DELTA = 0.25

# Left edge of x-space Mellin integrals; the small-argument expansion covers (-inf, MELLIN_X_LO]
MELLIN_X_LO = -12.0
MELLIN_X_HI = math.log(80.0)

THETA_OSC_T_RANGE = (0.2, 10.0)


def _check_x(*xs):
    for x in xs:
        if not (X_MIN <= x <= X_MAX):
            raise DomainError(
                f"x={x:g} outside [{X_MIN:.4g}, {X_MAX:.4g}] (K_iu(e^x) domain)")


def k_envelope(z, factors=1):
    """(bound, decay) with prod |K_{iu}(z_j)| <= bound * exp(-decay u).

    Args:
        z: argument(s) of the K factors
        factors: number of K factors when z is a scalar
    """
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if z.size == 1 and factors > 1:
        z = np.repeat(z, factors)
    bound = float(np.prod(special.k0(z * math.sin(ENVELOPE_DELTA))))
    decay = z.size * (0.5 * math.pi - ENVELOPE_DELTA)
    return bound, decay


# ---------------------------------------------------------------------------
# Heat kernel
# ---------------------------------------------------------------------------

def heat_kernel_p_quad(t, x, y, tol=1e-13, rel_tol=1e-11, t_min=DEFAULT_T_MIN):
    """QuadResult for p_t(x, y) = int_0^inf e^{-t u^2} K_{iu}(e^x) K_{iu}(e^y) mu(du).

    Arguments are put in canonical order (x <= y) before evaluation, so the
    result is exactly symmetric.
    """
    if not t >= t_min:
        raise DomainError(f"heat kernel needs t >= t_min={t_min:g}, got t={t:g}")
    x, y = (x, y) if x <= y else (y, x)
    _check_x(x, y)
    z = np.array([math.exp(x), math.exp(y)])
    bound, decay = k_envelope(z)

    def g(u):
        k = bessel_k_imag_grid(u, z)
        return k[0] * k[1]

    return integrate_spectral(g, t, tol=tol, bound=bound, decay=decay, rel_tol=rel_tol)


def heat_kernel_p(t, x, y, tol=1e-13, rel_tol=1e-11, t_min=DEFAULT_T_MIN):
    """Yakubovich heat kernel p_t(x, y).

    Raises:
        DomainError: t < t_min or e^x, e^y outside the K_{iu} box
        NonConvergenceError: spectral integral did not reach tolerance
    """
    result = heat_kernel_p_quad(t, x, y, tol=tol, rel_tol=rel_tol, t_min=t_min)
    return require_converged(result, f"p_{t:g}({x:g}, {y:g})").value


# ---------------------------------------------------------------------------
# Hartman-Watson density
# ---------------------------------------------------------------------------

def _theta_spectral_quad(r, t, tol, rel_tol):
    bound, decay = k_envelope(r)
    res = integrate_spectral(lambda u: bessel_k_imag_grid(u, [r])[0], 0.5 * t,
                             tol=2.0 * tol, bound=bound, decay=decay, rel_tol=rel_tol)
    return QuadResult(value=0.5 * res.value, err_est=0.5 * res.err_est, evals=res.evals,
                      converged=res.converged, cutoff=res.cutoff)


def _theta_oscillatory_quad(r, t, tol, rel_tol):
    scale = r * math.exp(math.pi ** 2 / (2.0 * t)) / math.sqrt(2.0 * math.pi ** 3 * t)
    y_max = min(math.acosh(1.0 + 60.0 / r), math.sqrt(2.0 * t * 80.0))
    # one break per half period of sin(pi y / t)
    breaks = np.arange(t, y_max, t)

    def integrand(y):
        return np.exp(-y * y / (2.0 * t) - r * np.cosh(y)) * np.sinh(y) * np.sin(math.pi * y / t)

    res = integrate_adaptive(integrand, 0.0, y_max, tol=tol / scale, rel_tol=rel_tol,
                             max_panels=100000, breakpoints=breaks.tolist())
    return QuadResult(value=scale * res.value, err_est=scale * res.err_est, evals=res.evals,
                      converged=res.converged)


def hartman_watson_theta_quad(r, t, method='spectral', tol=1e-13, rel_tol=1e-10,
                              t_min=DEFAULT_T_MIN):
    """QuadResult for the Hartman-Watson density theta(r, t)."""
    if not (r > 0 and t > 0):
        raise DomainError(f"theta needs r > 0 and t > 0, got r={r}, t={t}")
    if method == 'spectral':
        if not (K_Z_MIN <= r <= K_Z_MAX):
            raise DomainError(f"spectral theta needs r in [{K_Z_MIN:g}, {K_Z_MAX:g}]")
        if t < 2.0 * t_min:
            raise DomainError(f"spectral theta needs t >= 2 t_min = {2 * t_min:g}")
        return _theta_spectral_quad(r, t, tol, rel_tol)
    if method == 'oscillatory':
        lo, hi = THETA_OSC_T_RANGE
        if not (lo <= t <= hi):
            raise DomainError(f"oscillatory theta supported for t in [{lo:g}, {hi:g}]")
        return _theta_oscillatory_quad(r, t, tol, rel_tol)
    raise DomainError(f"unknown theta method {method!r}")


def hartman_watson_theta(r, t, method='spectral', tol=1e-13, rel_tol=1e-10,
                         t_min=DEFAULT_T_MIN):
    """Hartman-Watson density theta(r, t).

    'spectral' (default) evaluates (1/2) int e^{-t u^2/2} K_{iu}(r) mu(du);
    'oscillatory' evaluates the classical sin(pi y/t) integral and is limited
    to t in [0.2, 10].
    """
    result = hartman_watson_theta_quad(r, t, method=method, tol=tol, rel_tol=rel_tol,
                                       t_min=t_min)
    return require_converged(result, f"theta({r:g}, {t:g})").value


def _theta_u_grid(r_values, t_low, tol=1e-14):
    r_values = np.atleast_1d(r_values)
    bound, decay = k_envelope(float(r_values.min()))
    cutoff = min(spectral_cutoff(0.5 * t_low, tol, bound=bound, decay=decay), K_U_MAX)
    omega = abs(math.log(0.5 * float(r_values.min()))) + math.log1p(cutoff) + 1.0
    width = min(0.5, math.pi / (2.0 * omega))
    return gauss_legendre_panels(0.0, cutoff, width)


def hartman_watson_theta_array(r, t_array, tol=1e-14):
    """Spectral theta(r, t) for many t on one shared u-grid.

    Args:
        r: argument in the K_{iu} box
        t_array: times, all >= the smallest entry

    Returns:
        ndarray of theta values
    """
    t_array = np.atleast_1d(np.asarray(t_array, dtype=float))
    if np.any(t_array <= 0):
        raise DomainError("theta needs t > 0")
    u, w = _theta_u_grid(r, float(t_array.min()), tol)
    k = bessel_k_imag_grid(u, [r])[0]
    weights = w * mu_density(u) * k
    return 0.5 * np.exp(-0.5 * np.outer(t_array, u * u)) @ weights


def hartman_watson_theta_on_grid(r_log, t, tol=1e-14):
    """theta(e^r, t) for an array of log-arguments r, sharing one u-grid."""
    z = np.exp(r_log)
    u, w = _theta_u_grid(z, t, tol)
    weights = 0.5 * w * mu_density(u) * np.exp(-0.5 * t * u * u)
    return bessel_k_imag_grid(u, z) @ weights


def _macdonald_weight(r, x, y):
    return np.exp(-0.5 * (np.exp(r + x - y) + np.exp(r + y - x) + np.exp(x + y - r)))


def _macdonald_r_range(x, y):
    lo = x + y - math.log(200.0)
    hi = math.log(100.0 / math.cosh(x - y))
    return max(lo, X_MIN), min(hi, X_MAX)


def heat_kernel_via_theta_quad(t, x, y, tol=1e-10, rel_tol=1e-9, t_min=DEFAULT_T_MIN):
    """QuadResult for p_t(x, y) through the Hartman-Watson representation

        p_t(x, y) = int exp(-(e^{r+x-y} + e^{r+y-x} + e^{x+y-r})/2) theta(e^r, 2t) dr.

    The r-range is cut where the weight is below e^-100; below the K_{iu}
    box theta(e^r) ~ e^r supplies a left tail correction.
    """
    if not t >= t_min:
        raise DomainError(f"heat kernel needs t >= t_min={t_min:g}, got t={t:g}")
    x, y = (x, y) if x <= y else (y, x)
    _check_x(x, y)
    r_lo, r_hi = _macdonald_r_range(x, y)
    if not r_lo < r_hi:
        raise DomainError(f"empty r-range for (x, y) = ({x:g}, {y:g})")

    def integrand(r):
        return _macdonald_weight(r, x, y) * hartman_watson_theta_on_grid(r, 2.0 * t)

    body = integrate_adaptive(integrand, r_lo, r_hi, tol=tol, rel_tol=rel_tol)
    left_tail = 0.0
    if r_lo <= X_MIN + 1e-12 and x + y - math.log(200.0) < X_MIN:
        left_tail = float(integrand(np.array([r_lo]))[0])
    err_est = body.err_est + left_tail
    return QuadResult(value=body.value + left_tail, err_est=err_est, evals=body.evals,
                      converged=body.converged and err_est <= max(tol, rel_tol * abs(body.value)))


def heat_kernel_via_theta(t, x, y, tol=1e-10, rel_tol=1e-9, t_min=DEFAULT_T_MIN):
    """p_t(x, y) from the Hartman-Watson density; positive by construction."""
    result = heat_kernel_via_theta_quad(t, x, y, tol=tol, rel_tol=rel_tol, t_min=t_min)
    return require_converged(result, f"p_{t:g}({x:g}, {y:g}) via theta").value


def macdonald_rhs(u, x, y, tol=1e-12, rel_tol=1e-10):
    """(1/2) int exp(-(e^{r+x-y} + e^{r+y-x} + e^{x+y-r})/2) K_{iu}(e^r) dr.

    Equals K_{iu}(e^x) K_{iu}(e^y).
    """
    _check_x(x, y)
    r_lo, r_hi = _macdonald_r_range(x, y)

    def integrand(r):
        return 0.5 * _macdonald_weight(r, x, y) * bessel_k_imag_grid([u], np.exp(r))[:, 0]

    return integrate_adaptive(integrand, r_lo, r_hi, tol=tol, rel_tol=rel_tol)


# ---------------------------------------------------------------------------
# Kontorovich-Lebedev pair and Mellin transforms
# ---------------------------------------------------------------------------

def kl_forward(f, u, x_lo=MELLIN_X_LO, x_hi=MELLIN_X_HI, tol=1e-12, rel_tol=1e-10,
               left_tail=None):
    """K f(u) = int f(x) K_{iu}(e^x) dx over [x_lo, x_hi].

    Args:
        f: vectorized function of x
        u: spectral variable
        left_tail: optional callable u -> contribution of (-inf, x_lo]

    Returns:
        QuadResult
    """
    _check_x(x_lo, x_hi)
    u = abs(float(u))

    def integrand(x):
        return f(x) * bessel_k_imag_grid([u], np.exp(x))[:, 0]

    body = integrate_adaptive(integrand, x_lo, x_hi, tol=tol, rel_tol=rel_tol)
    tail = 0.0 if left_tail is None else float(left_tail(u))
    return QuadResult(value=body.value + tail, err_est=body.err_est, evals=body.evals,
                      converged=body.converged)


def _gamma_phase_coefficient(u):
    """Gamma(iu) 2^{iu}, the leading small-z coefficient of K_{iu}(z) = Re[A (z/2)^{0} z^{-iu} ...]."""
    return np.exp(log_gamma(1j * u) + 1j * u * math.log(2.0))


def mellin_left_tail(s, u, x_lo=MELLIN_X_LO, terms=3):
    """int_{-inf}^{x_lo} e^{sx} K_{iu}(e^x) dx from the ascending expansion."""
    if u < 1e-8:
        a = math.log(2.0) - np.euler_gamma
        head = math.exp(s * x_lo) * ((a - x_lo) / s + 1.0 / s ** 2)
        s2 = s + 2.0
        second = 0.25 * math.exp(s2 * x_lo) * ((a + 1.0 - x_lo) / s2 + 1.0 / s2 ** 2)
        return head + second
    coef = _gamma_phase_coefficient(u)
    total = 0.0
    poch = 1.0 + 0.0j
    for k in range(terms):
        if k > 0:
            poch *= (k - 1) + (1.0 - 1j * u)
        expo = s + 2 * k - 1j * u
        term = coef / (4.0 ** k * math.factorial(k) * poch) * np.exp(expo * x_lo) / expo
        total += term.real
    return total


def mellin_k(s, u, tol=1e-12, rel_tol=1e-11):
    """Numeric K[e^{sx}](u) = int e^{sx} K_{iu}(e^x) dx, s > 0.

    The closed form is 2^{s-2} |Gamma((s+iu)/2)|^2.
    """
    if not s > 0:
        raise DomainError(f"mellin_k needs s > 0, got {s}")
    return kl_forward(lambda x: np.exp(s * x), u, tol=tol, rel_tol=rel_tol,
                      left_tail=lambda uu: mellin_left_tail(s, uu))


def mellin_k_product(t, u, v, tol=1e-12, rel_tol=1e-11):
    """Numeric int e^{tx} K_{iu}(e^x) K_{iv}(e^x) dx for t > 0, u, v > 0."""
    if not t > 0:
        raise DomainError(f"mellin_k_product needs t > 0, got {t}")
    u = abs(float(u))
    v = abs(float(v))
    if u <= 0 or v <= 0:
        raise DomainError("mellin_k_product left tail needs u, v > 0")

    def integrand(x):
        k = bessel_k_imag_grid([u, v], np.exp(x))
        return np.exp(t * x) * k[:, 0] * k[:, 1]

    body = integrate_adaptive(integrand, MELLIN_X_LO, MELLIN_X_HI, tol=tol, rel_tol=rel_tol)
    a = _gamma_phase_coefficient(u)
    b = _gamma_phase_coefficient(v)
    e_sum = t - 1j * (u + v)
    e_diff = t - 1j * (u - v)
    tail = (0.5 * (a * b * np.exp(e_sum * MELLIN_X_LO) / e_sum).real
            + 0.5 * (a * np.conj(b) * np.exp(e_diff * MELLIN_X_LO) / e_diff).real)
    return QuadResult(value=body.value + float(tail), err_est=body.err_est, evals=body.evals,
                      converged=body.converged)


def kl_inverse(g, x, damping, tol=1e-12, rel_tol=1e-10, bound=1.0, power=0.0):
    """K^{-1}[e^{-damping u^2} g](x) = int K_{iu}(e^x) e^{-damping u^2} g(u) mu(du).

    Args:
        g: vectorized function of u with |g(u)| <= bound (1+u)^power
        x: point in the K_{iu}(e^x) domain
        damping: Gaussian damping > 0
    """
    _check_x(x)
    z = math.exp(x)
    k_bound, decay = k_envelope(z)

    def integrand(u):
        return bessel_k_imag_grid(u, [z])[0] * g(u)

    return integrate_spectral(integrand, damping, tol=tol, bound=bound * k_bound, power=power,
                              decay=decay, rel_tol=rel_tol)


# ---------------------------------------------------------------------------
# Dual kernels
# ---------------------------------------------------------------------------

def log_q_tilde_kernel(t, u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return (t * math.log(2.0)
            + log_gamma_prod_abs2(0.5 * (t + 1j * (u + v)), 0.5 * (t + 1j * (u - v)))
            - math.log(4.0 * math.pi) - math.lgamma(t) - log_gamma_abs2(1j * v))


def q_tilde_kernel(t, u, v):
    """Kernel of K e^{tx} K^{-1}:

        2^t |Gamma((t+i(u+v))/2, (t+i(u-v))/2)|^2 / (4 pi Gamma(t) |Gamma(iv)|^2).

    Vectorized in v; evaluated in log space.
    """
    if not t > 0 or np.any(np.asarray(u) <= 0) or np.any(np.asarray(v) <= 0):
        raise DomainError("q_tilde_kernel needs t, u, v > 0")
    out = np.exp(log_q_tilde_kernel(t, u, v))
    return float(out) if np.ndim(out) == 0 else out


def q_tilde_apply(g, t, u, tail, tol=1e-12, rel_tol=1e-10):
    """int_0^inf q~_t(u, v) g(v) dv; ``tail`` is the TailPolicy of the product."""
    return integrate_semi_infinite(lambda v: _q_tilde_safe(t, u, v) * g(v), 0.0, tol=tol,
                                   tail=tail, rel_tol=rel_tol)


def _q_tilde_safe(t, u, v):
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    pos = v > 0
    if np.any(pos):
        out[pos] = np.exp(log_q_tilde_kernel(t, u, v[pos]))
    return out


def _check_cdh_order(s, t, c, allow_terminal=False):
    if not s < t:
        raise OrderError(f"need s < t, got s={s:g}, t={t:g}")
    if t > c or (t == c and not allow_terminal):
        raise OrderError(f"need t < c, got t={t:g}, c={c:g}")


def log_cdh_transition_density(s, t, u, v, c):
    u = float(u)
    v = np.asarray(v, dtype=float)
    d = t - s
    numer = log_gamma_prod_abs2(0.5 * (c - t + 1j * v), 0.5 * (d + 1j * (u + v)),
                                0.5 * (d + 1j * (u - v)))
    denom = (math.log(4.0 * math.pi) + math.lgamma(d)
             + log_gamma_abs2(0.5 * (c - s + 1j * u)) + log_gamma_abs2(1j * v))
    return numer - denom


def _cdh_density(s, t, u, v, c):
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape)
    pos = v > 0
    if np.any(pos):
        out[pos] = np.exp(log_cdh_transition_density(s, t, u, v[pos], c))
    return float(out) if out.ndim == 0 else out


def cdh_transition_density(s, t, u, v, c):
    """Transition density q_{s,t}(u, v) of the continuous dual Hahn process Z.

        |Gamma((c-t+iv)/2, (t-s+i(u+v))/2, (t-s+i(u-v))/2)|^2
        / (4 pi Gamma(t-s) |Gamma((c-s+iu)/2, iv)|^2)

    Vectorized in v; zero at v = 0.

    Raises:
        OrderError: s >= t or t >= c
    """
    _check_cdh_order(s, t, c)
    if not u > 0:
        raise DomainError(f"cdh_transition_density needs u > 0, got {u}")
    return _cdh_density(s, t, u, v, c)


def cdh_transition_density_T(s, t, x, y, c):
    """Density of the squared process T = Z^2: q_{s,t}(sqrt x, sqrt y) / (2 sqrt y)."""
    _check_cdh_order(s, t, c)
    if not x >= 0:
        raise DomainError(f"absolutely continuous branch needs x >= 0, got {x}")
    return _cdh_density_T(s, t, x, y, c)


def _cdh_density_T(s, t, x, y, c):
    y = np.asarray(y, dtype=float)
    out = np.zeros(y.shape)
    pos = y > 0
    if np.any(pos):
        root = np.sqrt(y[pos])
        out[pos] = np.exp(log_cdh_transition_density(s, t, math.sqrt(x), root, c)) / (2.0 * root)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class TransitionMeasure:
    """A transition probability as density plus atoms.

    ``density`` is a vectorized pdf in y (None for a purely atomic measure);
    ``sqrt_density`` is the same law in v = sqrt(y), used for integration.
    """

    density: Optional[Callable] = None
    sqrt_density: Optional[Callable] = None
    support: Tuple[float, float] = (0.0, math.inf)
    atoms: Tuple[Tuple[float, float], ...] = ()

    def total_mass(self, tol=1e-12):
        mass = math.fsum(m for _, m in self.atoms)
        if self.sqrt_density is not None:
            res = integrate_semi_infinite(self.sqrt_density, 0.0, tol=tol,
                                          tail=TailPolicy.exponential(0.5 * math.pi))
            mass += res.value
        return mass

    def expect(self, f, tol=1e-12, tail_rate=0.5 * math.pi):
        """int f(y) P(dy) for vectorized f."""
        total = math.fsum(m * float(f(np.array([loc]))[0]) for loc, m in self.atoms)
        if self.sqrt_density is not None:
            res = integrate_semi_infinite(lambda v: self.sqrt_density(v) * f(v * v), 0.0,
                                          tol=tol, tail=TailPolicy.exponential(tail_rate))
            total += res.value
        return total


def cdh_transition_measure(s, t, x, c):
    """Transition probability of the squared process T from x at time s to time t.

    Branches:
        x >= 0                 absolutely continuous density
        x < -(c-s)^2           point mass at -(c-t)^2
        -(c-s)^2 <= x < 0      not implemented (mixed orthogonality measure)
    """
    _check_cdh_order(s, t, c, allow_terminal=True)
    if x >= 0:
        root = math.sqrt(x)
        return TransitionMeasure(
            density=lambda y: _cdh_density_T(s, t, x, y, c),
            sqrt_density=lambda v: _cdh_density(s, t, root, v, c),
        )
    if x < -(c - s) ** 2:
        return TransitionMeasure(support=(-(c - t) ** 2, -(c - t) ** 2),
                                 atoms=((-(c - t) ** 2, 1.0),))
    raise NotImplementedError(
        f"transition from x={x:g} in [-(c-s)^2, 0] needs the mixed orthogonality measure")


# ---------------------------------------------------------------------------
# Shared spectral grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralCache:
    """K_{iu_j}(e^{x_i}) on a fixed x-grid and a composite Gauss-Legendre u-grid.

    ``u_weights`` already include the mu density. Arrays are read-only.
    """

    x_grid: np.ndarray
    u_grid: np.ndarray
    u_weights: np.ndarray
    k_values: np.ndarray
    t_min: float
    cutoff: float
    panel: float

    @classmethod
    def build(cls, x_grid, t_min=0.05, tol=1e-12, panel=None):
        """Tabulate K on the grid; the u cutoff is sized for kernels at t >= t_min."""
        x_grid = np.asarray(x_grid, dtype=float)
        _check_x(float(x_grid.min()), float(x_grid.max()))
        bound, decay = k_envelope(math.exp(float(x_grid.min())), factors=2)
        cutoff = spectral_cutoff(t_min, tol, bound=bound, decay=decay)
        if cutoff > K_U_MAX:
            logger.warning("spectral cache: cutoff %.1f for t_min=%g clipped to %g",
                           cutoff, t_min, K_U_MAX)
            cutoff = K_U_MAX
        if panel is None:
            omega = 2.0 * float(np.max(np.abs(x_grid))) + 2.0 * math.log(2.0 * cutoff + 2.0) + 1.0
            panel = min(1.0, math.pi / omega)
        u, w = gauss_legendre_panels(0.0, cutoff, panel)
        k = bessel_k_imag_grid(u, np.exp(x_grid))
        weights = w * mu_density(u)
        for arr in (x_grid, u, weights, k):
            arr.setflags(write=False)
        logger.debug("spectral cache: %d x-points, %d u-nodes, cutoff %.2f, panel %.4f",
                     x_grid.size, u.size, cutoff, panel)
        return cls(x_grid=x_grid, u_grid=u, u_weights=weights, k_values=k,
                   t_min=float(t_min), cutoff=float(cutoff), panel=float(panel))

    def refine(self):
        """Same cache with the u-panel width halved."""
        return SpectralCache.build(self.x_grid, t_min=self.t_min, panel=0.5 * self.panel)

    def _check_t(self, t):
        if t < self.t_min:
            raise DomainError(f"cache built for t >= {self.t_min:g}, got t={t:g}")

    def inverse(self, g_values):
        """K^{-1} g on the x-grid for g tabulated on the u-grid."""
        return self.k_values @ (self.u_weights * g_values)

    def kernel(self, t):
        """Matrix p_t(x_i, x_j)."""
        self._check_t(t)
        scaled = self.k_values * (self.u_weights * np.exp(-t * self.u_grid ** 2))
        return scaled @ self.k_values.T

    def kernel_between(self, t, other):
        """Matrix p_t(x_i, y_j) for x on this grid and y on ``other``'s grid (same u-grid)."""
        self._check_t(t)
        if other.u_grid.shape != self.u_grid.shape or not np.array_equal(other.u_grid, self.u_grid):
            raise DomainError("kernel_between needs caches that share a u-grid")
        scaled = self.k_values * (self.u_weights * np.exp(-t * self.u_grid ** 2))
        return scaled @ other.k_values.T

    def with_x_grid(self, x_grid):
        """New cache on another x-grid reusing this u-grid."""
        x_grid = np.asarray(x_grid, dtype=float)
        _check_x(float(x_grid.min()), float(x_grid.max()))
        k = bessel_k_imag_grid(self.u_grid, np.exp(x_grid))
        x_grid.setflags(write=False)
        k.setflags(write=False)
        return SpectralCache(x_grid=x_grid, u_grid=self.u_grid, u_weights=self.u_weights,
                             k_values=k, t_min=self.t_min, cutoff=self.cutoff, panel=self.panel)


def check_cache_kernel(cache, t, rel_tol=1e-8):
    """Compare the cached p_t diagonal against a refined cache; raise when they disagree."""
    coarse = np.diag(cache.kernel(t))
    fine_cache = cache.refine()
    fine = np.diag(fine_cache.kernel(t))
    scale = np.maximum(np.abs(fine), 1e-300)
    worst = float(np.max(np.abs(coarse - fine) / scale))
    if worst > rel_tol:
        raise NonConvergenceError(f"spectral cache not resolved at t={t:g}: rel diff {worst:.3g}")
    return fine_cache if worst > 0.1 * rel_tol else cache

