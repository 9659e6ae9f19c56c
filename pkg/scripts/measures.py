"""
Normalizing constants, weight functions and entrance laws.

    C^tau_{a,c}     normalizing constant of the joint density of Y
    K^tau_{a,c}     entrance-law normalization, a multiple of C
    h_s, g_s        Mellin transforms of e^{(c-s)x} and e^{(a+s)x}
    H_t             space-time harmonic function used for the Doob transform
    phi_s           entrance density of the dual Hahn process Z
    p_s             entrance law of T = Z^2 (density plus atoms)

and the monic continuous dual Hahn polynomials with their Favard check.

All Gamma products are evaluated in log space.
"""

import math
import logging
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Tuple

import numpy as np

from errors import (
    DomainError, FavardViolation, MethodDomain, OrderError, RangeError, StripError,
)
from quad import (
    QuadResult, TailPolicy, integrate_adaptive, integrate_semi_infinite, require_converged,
    gauss_legendre_panels,
)
from specfun import bessel_k_real, log_gamma_abs2, log_gamma_prod_abs2, mu_density, pochhammer
from kernels import (
    DEFAULT_T_MIN, MELLIN_X_HI, MELLIN_X_LO, SpectralCache, X_MIN, hartman_watson_theta_on_grid,
    kl_inverse, mellin_left_tail,
)

logger = logging.getLogger(__name__)


# a within this distance of a residue boundary -2k is treated as on it
NEAR_POLE = 1e-9

C_METHODS = ('spectral', 'direct2d', 'hartman_watson')

# u beyond which the Laplace-of-C integrand is replaced by its Stirling asymptote
LAPLACE_U_SPLIT = 1e4


@dataclass(frozen=True)
class Params:
    """Model parameters a, c and the time horizon tau.

    Raises:
        RangeError: a + c <= 0 or tau <= 0
    """

    a: float
    c: float
    tau: float = 1.0

    def __post_init__(self):
        for name in ('a', 'c', 'tau'):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise RangeError(f"{name} must be finite, got {value}")
        if not self.a + self.c > 0:
            raise RangeError(f"need a + c > 0, got a={self.a:g}, c={self.c:g}")
        if not self.tau > 0:
            raise RangeError(f"need tau > 0, got tau={self.tau:g}")

    @property
    def S(self):
        """Upper end 2 + (c - 2) 1_{(0,2)}(c) of the original time range of T."""
        return self.c if 0.0 < self.c < 2.0 else 2.0

    def swapped(self):
        return Params(a=self.c, c=self.a, tau=self.tau)

    def shifted(self, s):
        """Parameters (a + s, c - s) that appear in the dual representation."""
        return Params(a=self.a + s, c=self.c - s, tau=self.tau)

    @classmethod
    def from_mapping(cls, values):
        return cls(a=float(values['a']), c=float(values['c']), tau=float(values.get('tau', 1.0)))


# ---------------------------------------------------------------------------
# Normalizing constant C
# ---------------------------------------------------------------------------

def _c_frak_integrand(a, c, tau):
    def integrand(u):
        u = np.asarray(u, dtype=float)
        log_ratio = log_gamma_prod_abs2(0.5 * (a + 1j * u), 0.5 * (c + 1j * u)) \
            - log_gamma_abs2(1j * u)
        return np.exp(log_ratio - tau * u * u) / (8.0 * math.pi)
    return integrand


def c_frak_quad(a, c, tau, tol=1e-13, rel_tol=1e-12):
    """QuadResult for (1/8pi) int e^{-tau u^2} |Gamma((a+iu)/2, (c+iu)/2)|^2 / |Gamma(iu)|^2 du."""
    lo, hi = sorted((float(a), float(c)))
    return integrate_semi_infinite(_c_frak_integrand(lo, hi, tau), 0.0, tol=tol,
                                   tail=TailPolicy.gaussian(tau), rel_tol=rel_tol)


def c_frak(params, tol=1e-13):
    """Continuous part of the spectral C (without the 2^{a+c} factor)."""
    result = c_frak_quad(params.a, params.c, params.tau, tol=tol)
    return require_converged(result, "spectral C integral").value


def _residue_terms(a, c):
    """(a + 2k, coefficient) for the residues with a + 2k < 0.

    The coefficient multiplies e^{tau (a+2k)^2}. The 1/(2a Gamma(-a)) prefactor
    is written as -1/(2 Gamma(1-a)), which stays finite as a -> 0.
    """
    if a >= 0:
        return []
    log_pref = math.lgamma(0.5 * (c + a)) + math.lgamma(0.5 * (c - a)) - math.lgamma(1.0 - a)
    pref = -0.5 * math.exp(log_pref)
    terms = []
    ratio = 1.0
    k = 0
    while a + 2 * k < 0:
        shift = a + 2 * k
        if abs(shift) > NEAR_POLE:
            terms.append((shift, pref * shift * ratio))
        if a + 2 * (k + 1) >= 0:
            break
        # nonzero whenever a + c > 0
        ratio *= (a + k) * (0.5 * (a + c) + k) / ((k + 1) * (1.0 + 0.5 * (a - c) + k))
        k += 1
    return terms


def d_frak(a, c, tau):
    """Finite residue sum of the spectral C; zero when a >= 0."""
    return math.fsum(coef * math.exp(tau * shift * shift) for shift, coef in _residue_terms(a, c))


@lru_cache(maxsize=256)
def _c_spectral(a, c, tau, tol):
    lo, hi = sorted((a, c))
    cont = c_frak_quad(lo, hi, tau, tol=tol)
    # at most one residue sum is nonzero
    disc = d_frak(lo, hi, tau) + d_frak(hi, lo, tau)
    scale = 2.0 ** (a + c)
    return QuadResult(value=scale * (cont.value + disc), err_est=scale * cont.err_est,
                      evals=cont.evals, converged=cont.converged, cutoff=cont.cutoff)


def _mellin_columns(cache, x_weights, exponent):
    """int e^{exponent x} K_{iu}(e^x) dx on the cache u-grid, with analytic left tail."""
    body = cache.k_values.T @ (x_weights * np.exp(exponent * cache.x_grid))
    tail = np.array([mellin_left_tail(exponent, u) for u in cache.u_grid])
    return body + tail


def _c_direct2d_value(a, c, tau, cache, x_weights):
    col_a = _mellin_columns(cache, x_weights, a)
    col_c = _mellin_columns(cache, x_weights, c)
    return float(np.sum(cache.u_weights * np.exp(-tau * cache.u_grid ** 2) * col_a * col_c))


def _c_direct2d(a, c, tau, tol):
    """Tensor Gauss-Legendre quadrature of int int e^{ax+cy} p_tau(x, y) dx dy.

    The heat kernel's u-integral is carried on the SpectralCache grid; both
    x-integrals use the same composite rule on [MELLIN_X_LO, MELLIN_X_HI]
    plus the small-argument left tail. The error estimate is the change
    under halving the u-panel.
    """
    x, w = gauss_legendre_panels(MELLIN_X_LO, MELLIN_X_HI, 0.25)
    cache = SpectralCache.build(x, t_min=tau, tol=min(tol, 1e-13))
    coarse = _c_direct2d_value(a, c, tau, cache, w)
    fine = _c_direct2d_value(a, c, tau, cache.refine(), w)
    err = abs(fine - coarse)
    return QuadResult(value=fine, err_est=err, evals=2 * cache.k_values.size,
                      converged=err <= max(tol, 1e-9 * abs(fine)))


def _c_hartman_watson(a, c, tau, tol):
    """C = 2^k Gamma(k) int e^{k r} K_nu(e^r) theta(e^r, 2 tau) dr, k=(a+c)/2, nu=(c-a)/2.

    Below the K_{iu} box the integrand behaves like e^{(min(a,c)+1) r}; that
    tail is added analytically.
    """
    kappa = 0.5 * (a + c)
    nu = 0.5 * (c - a)
    slope = min(a, c) + 1.0
    r_lo = X_MIN
    r_hi = math.log(80.0)

    def integrand(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        z = np.exp(r)
        return np.exp(kappa * r) * bessel_k_real(nu, z) * hartman_watson_theta_on_grid(r, 2.0 * tau)

    body = integrate_adaptive(integrand, r_lo, r_hi, tol=tol, rel_tol=1e-10)
    tail = float(integrand(np.array([r_lo]))[0]) / slope
    scale = 2.0 ** kappa * math.gamma(kappa)
    return QuadResult(value=scale * (body.value + tail), err_est=scale * (body.err_est + 0.1 * tail),
                      evals=body.evals, converged=body.converged)


def normalizing_C_quad(params, method='spectral', tol=1e-12):
    """QuadResult for C^tau_{a,c} by the chosen route.

    Methods:
        spectral        2^{a+c} (C_frak + residue sum); valid for all a + c > 0
        direct2d        the defining double integral; needs a, c > 0
        hartman_watson  single r-integral against theta(e^r, 2 tau); needs min(a, c) > -1

    Raises:
        MethodDomain: method not valid for the parameters
    """
    a, c, tau = params.a, params.c, params.tau
    if method == 'spectral':
        return _c_spectral(a, c, tau, tol)
    if method == 'direct2d':
        if not (a > 0 and c > 0):
            raise MethodDomain(f"direct2d needs a > 0 and c > 0, got a={a:g}, c={c:g}")
        return _c_direct2d(a, c, tau, tol)
    if method == 'hartman_watson':
        if not min(a, c) > -1.0:
            raise MethodDomain("hartman_watson route needs min(a, c) > -1")
        if tau < DEFAULT_T_MIN:
            raise MethodDomain(f"hartman_watson route needs tau >= {DEFAULT_T_MIN:g}")
        return _c_hartman_watson(a, c, tau, tol)
    raise MethodDomain(f"unknown method {method!r}; expected one of {', '.join(C_METHODS)}")


def normalizing_C(params, method='spectral', tol=1e-12):
    """Normalizing constant C^tau_{a,c}; symmetric in (a, c)."""
    result = normalizing_C_quad(params, method=method, tol=tol)
    return require_converged(result, f"C({params.a:g}, {params.c:g}, {params.tau:g})").value


def normalizing_K(params, method='spectral', tol=1e-12):
    """K^tau_{a,c} = (a+c)(a+c+2) / 2^{a+c+1} * C^tau_{a,c}."""
    s = params.a + params.c
    return s * (s + 2.0) / 2.0 ** (s + 1.0) * normalizing_C(params, method=method, tol=tol)


# ---------------------------------------------------------------------------
# Laplace transform of C in tau
# ---------------------------------------------------------------------------

def _check_strip(a, c, lam):
    if not 0.0 < a + c < 2.0:
        raise StripError(f"closed form needs 0 < a + c < 2, got a + c = {a + c:g}")
    if not lam > max(-a, -c):
        raise DomainError(f"need lambda > max(-a, -c) = {max(-a, -c):g}, got {lam:g}")


def laplace_C_closed(a, c, lam):
    """int_0^inf e^{-lambda^2 tau} C^tau_{a,c} dtau in closed form.

        2^{a+c} pi / (8 sin(pi (a+c)/2))
        * Gamma((a+lam)/2) Gamma((c+lam)/2) / (Gamma((lam+2-a)/2) Gamma((lam+2-c)/2))
    """
    _check_strip(a, c, lam)
    log_ratio = (math.lgamma(0.5 * (a + lam)) + math.lgamma(0.5 * (c + lam))
                 - math.lgamma(0.5 * (lam + 2.0 - a)) - math.lgamma(0.5 * (lam + 2.0 - c)))
    return 2.0 ** (a + c) * math.pi / (8.0 * math.sin(0.5 * math.pi * (a + c))) * math.exp(log_ratio)


def laplace_C_numeric(a, c, lam, tol=1e-11):
    """Numeric Laplace transform of the spectral C, taken inside the u-integral.

    e^{-tau u^2} integrates to 1/(lam^2 + u^2), each residue term
    e^{tau z^2} to 1/(lam^2 - z^2). The u-integral has an algebraic tail
    ~ u^{a+c-3}; beyond LAPLACE_U_SPLIT its Stirling asymptote is used.

    Returns:
        QuadResult
    """
    _check_strip(a, c, lam)
    lam2 = lam * lam

    def integrand(u):
        u = np.asarray(u, dtype=float)
        log_ratio = log_gamma_prod_abs2(0.5 * (a + 1j * u), 0.5 * (c + 1j * u)) \
            - log_gamma_abs2(1j * u)
        return np.exp(log_ratio) / (8.0 * math.pi * (lam2 + u * u))

    head = integrate_adaptive(integrand, 0.0, 1.0, tol=0.5 * tol, rel_tol=1e-12)
    body = integrate_adaptive(lambda w: integrand(np.exp(w)) * np.exp(w), 0.0,
                              math.log(LAPLACE_U_SPLIT), tol=0.5 * tol, rel_tol=1e-12)
    power = a + c - 2.0
    tail = 0.25 * 2.0 ** (-power) * LAPLACE_U_SPLIT ** power / (-power)
    residues = 0.0
    for lo, hi in ((a, c), (c, a)):
        residues += math.fsum(coef / (lam2 - shift * shift) for shift, coef in _residue_terms(lo, hi))
    scale = 2.0 ** (a + c)
    value = scale * (head.value + body.value + tail + residues)
    err = scale * (head.err_est + body.err_est + tail / LAPLACE_U_SPLIT ** 2)
    return QuadResult(value=value, err_est=err, evals=head.evals + body.evals,
                      converged=head.converged and body.converged)


# ---------------------------------------------------------------------------
# Weight functions
# ---------------------------------------------------------------------------

def _as_result(value):
    return float(value) if np.ndim(value) == 0 else value


def _mellin_weight(exponent, u):
    u = np.asarray(u, dtype=float)
    return _as_result(2.0 ** (exponent - 2.0) * np.exp(log_gamma_abs2(0.5 * (exponent + 1j * u))))


def h_fun(s, u, c):
    """h_s(u) = 2^{c-s-2} |Gamma((c-s+iu)/2)|^2, vectorized in u.

    Raises:
        OrderError: s >= c
    """
    if not s < c:
        raise OrderError(f"h_s needs s < c, got s={s:g}, c={c:g}")
    return _mellin_weight(c - s, u)


def g_fun(s, u, a):
    """g_s(u) = 2^{a+s-2} |Gamma((a+s+iu)/2)|^2, vectorized in u.

    Raises:
        RangeError: a + s <= 0
    """
    if not a + s > 0:
        raise RangeError(f"g_s needs a + s > 0, got a={a:g}, s={s:g}")
    return _mellin_weight(a + s, u)


def harmonic_weight(t, x, exponent, tau, tol=1e-12):
    """int p_{tau-t}(x, y) e^{exponent y} dy via its spectral form.

    Raises:
        DomainError: exponent <= 0 (the y-integral diverges) or t outside [0, tau]
    """
    if not 0.0 <= t <= tau:
        raise DomainError(f"need 0 <= t <= tau, got t={t:g}, tau={tau:g}")
    if t == tau:
        return math.exp(exponent * x)
    if not exponent > 0:
        raise DomainError(f"spectral harmonic function needs a positive exponent, got {exponent:g}")
    bound = _mellin_weight(exponent, 0.0)
    result = kl_inverse(lambda u: _mellin_weight(exponent, u), x, tau - t, tol=tol, bound=bound)
    return require_converged(result, f"H_{t:g}({x:g})").value


def H_fun(t, x, params, tol=1e-12):
    """Space-time harmonic function H_t(x) = int p_{tau-t}(x, y) e^{cy} dy; H_tau = e^{cx}."""
    return harmonic_weight(t, x, params.c, params.tau, tol=tol)


def _check_dual_time(s, params):
    if not -params.a < s < params.c:
        raise RangeError(f"need -a < s < c, got s={s:g} with a={params.a:g}, c={params.c:g}")


def phi_density(s, u, params, C=None):
    """Entrance density of Z at time s:

        phi_s(u) = 2^{a+c} / (8 pi C) |Gamma((a+s+iu)/2, (c-s+iu)/2)|^2 / |Gamma(iu)|^2

    Args:
        C: normalizing constant; computed spectrally when omitted

    Raises:
        RangeError: s outside (-a, c)
    """
    _check_dual_time(s, params)
    if C is None:
        C = normalizing_C(params)
    u = np.asarray(u, dtype=float)
    log_val = (log_gamma_prod_abs2(0.5 * (params.a + s + 1j * u), 0.5 * (params.c - s + 1j * u))
               - log_gamma_abs2(1j * u))
    return _as_result(2.0 ** (params.a + params.c) / (8.0 * math.pi * C) * np.exp(log_val))


def phi_density_factorized(s, u, params, C=None):
    """h_s(u) g_s(u) mu(u) / C."""
    _check_dual_time(s, params)
    if C is None:
        C = normalizing_C(params)
    return _as_result(h_fun(s, u, params.c) * g_fun(s, u, params.a) * mu_density(u) / C)


# ---------------------------------------------------------------------------
# Entrance law of T
# ---------------------------------------------------------------------------

def _entrance_prefactor(params):
    s = params.a + params.c
    return s * (s + 2.0) / (16.0 * math.pi)


def entrance_density_u(s, u, params):
    """Absolutely continuous part of p_s in the coordinate u = sqrt(x).

        (a+c)(a+c+2)/(16 pi) |Gamma((a+s+iu)/2, (c-s+iu)/2)|^2 / |Gamma(iu)|^2
    """
    if not s <= params.c:
        raise OrderError(f"entrance law needs s <= c, got s={s:g}")
    u = np.asarray(u, dtype=float)
    log_val = (log_gamma_prod_abs2(0.5 * (params.a + s + 1j * u), 0.5 * (params.c - s + 1j * u))
               - log_gamma_abs2(1j * u))
    return _as_result(_entrance_prefactor(params) * np.exp(log_val))


def entrance_atoms(s, params):
    """Atoms (location, mass) of p_s: at -(2j+a+s)^2 for integers 0 <= j < -(a+s)/2."""
    a, c = params.a, params.c
    base = a + s
    if base >= 0:
        return ()
    sum_ac = a + c
    log_front = (math.log(sum_ac * (sum_ac + 2.0) / 4.0) + math.lgamma(0.5 * (c - a - 2.0 * s))
                 + math.lgamma(0.5 * sum_ac) - math.lgamma(-base))
    front = math.exp(log_front)
    atoms = []
    j = 0
    while 2 * j + base < 0:
        shift = base + 2 * j
        ratio = (pochhammer(base, j) * pochhammer(0.5 * sum_ac, j)
                 / (base * math.factorial(j) * pochhammer(1.0 + 0.5 * (2.0 * s + a - c), j)))
        atoms.append((-shift * shift, front * shift * ratio))
        j += 1
    return tuple(atoms)


@dataclass(frozen=True)
class EntranceLaw:
    """The sigma-finite measure p_s: density on (0, inf) plus atoms at negative points."""

    s: float
    params: Params
    density: Callable = field(repr=False, compare=False)
    density_u: Callable = field(repr=False, compare=False)
    atoms: Tuple[Tuple[float, float], ...] = ()

    def laplace(self, tau=None, tol=1e-12):
        """int e^{-tau x} p_s(dx)."""
        tau = self.params.tau if tau is None else tau
        res = integrate_semi_infinite(lambda u: self.density_u(u) * np.exp(-tau * u * u), 0.0,
                                      tol=tol, tail=TailPolicy.gaussian(tau), rel_tol=1e-12)
        atom_part = math.fsum(mass * math.exp(-tau * loc) for loc, mass in self.atoms)
        return require_converged(res, "entrance law Laplace transform").value + atom_part


def entrance_law_p(s, params):
    """Entrance law p_s of the continuous dual Hahn process T at time s <= c."""
    if not s <= params.c:
        raise OrderError(f"entrance law needs s <= c, got s={s:g}, c={params.c:g}")

    def density_u(u):
        return entrance_density_u(s, u, params)

    def density(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        pos = x > 0
        if np.any(pos):
            root = np.sqrt(x[pos])
            out[pos] = entrance_density_u(s, root, params) / (2.0 * root)
        return _as_result(out)

    atoms = entrance_atoms(s, params)
    if atoms:
        logger.debug("entrance law at s=%g has %d atoms", s, len(atoms))
    return EntranceLaw(s=s, params=params, density=density, density_u=density_u, atoms=atoms)


def entrance_laplace(s, params, tau=None, tol=1e-12):
    """int e^{-tau x} p_s(dx), density plus atoms."""
    return entrance_law_p(s, params).laplace(tau=tau, tol=tol)


# ---------------------------------------------------------------------------
# Continuous dual Hahn polynomials
# ---------------------------------------------------------------------------

def _recurrence(n, alpha, beta, gamma):
    a_n = (n + alpha + beta) * (n + alpha + gamma)
    c_n = n * (n - 1 + beta + gamma)
    return a_n, c_n


def favard_check(alpha, beta, gamma, n):
    """Partial products prod_{k<=m} A_k C_{k+1} for m = 0..n and whether all are >= 0."""
    products = []
    running = 1.0
    for k in range(n + 1):
        a_k, _ = _recurrence(k, alpha, beta, gamma)
        _, c_next = _recurrence(k + 1, alpha, beta, gamma)
        running *= complex(a_k * c_next).real
        products.append(running)
    ok = all(p >= -1e-12 * max(1.0, abs(p)) for p in products)
    return products, ok


def cdh_poly_table(n_max, x, alpha, beta, gamma):
    """Monic continuous dual Hahn polynomials p_0..p_{n_max} at the points x.

    beta and gamma are real or a complex-conjugate pair; the recurrence
    coefficients are then real.

    Returns:
        ndarray of shape (n_max + 1, len(x))
    """
    if isinstance(n_max, bool) or int(n_max) != n_max or n_max < 0:
        raise DomainError(f"n must be a nonnegative integer, got {n_max!r}")
    n_max = int(n_max)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    _, ok = favard_check(alpha, beta, gamma, max(n_max, 1))
    if not ok:
        warnings.warn(f"Favard condition fails for alpha={alpha}, beta={beta}, gamma={gamma}",
                      FavardViolation, stacklevel=2)
        logger.warning("Favard condition fails for alpha=%s beta=%s gamma=%s", alpha, beta, gamma)
    table = np.zeros((n_max + 1, x.size))
    table[0] = 1.0
    prev = np.zeros(x.size)
    alpha2 = alpha * alpha
    for n in range(n_max):
        a_n, c_n = _recurrence(n, alpha, beta, gamma)
        a_prev, _ = _recurrence(n - 1, alpha, beta, gamma)
        diag = complex(a_n + c_n - alpha2).real
        off = complex(a_prev * c_n).real
        table[n + 1] = (x - diag) * table[n] - off * prev
        prev = table[n]
    return table


def cdh_poly(n, x, alpha, beta, gamma):
    """Monic continuous dual Hahn polynomial p_n(x | alpha, beta, gamma).

    A failed Favard condition is reported with a FavardViolation warning; the
    value is still returned.
    """
    values = cdh_poly_table(n, x, alpha, beta, gamma)[-1]
    return float(values[0]) if np.ndim(x) == 0 else values
