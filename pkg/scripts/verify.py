"""
Identity verification - checks numerically verifiable equalities of the toolkit.

Each catalog entry evaluates the two sides of an identity along separate
code paths (closed forms, adaptive quadrature, x-space tensor quadrature on
a SpectralCache, Monte Carlo) and produces an IdentityReport. run_suite
walks the catalog in a fixed order; a failing or erroring entry becomes a
failed report and never stops the suite.

This module also evaluates the Laplace transform psi^tau(s, t) of the
process Y by three routes:

    cdh_quadrature  tensor quadrature of the dual Hahn chain (Z side)
    y_quadrature    x-space quadrature of the joint density of Y
    y_montecarlo    sample_Y paths
"""

import math
import time
import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Dict, Tuple

import numpy as np

from errors import (
    DomainError, GridError, KpzNumericsError, NonConvergenceError, RangeError, RouteDomain,
    UnknownIdentity,
)
from quad import (
    QuadResult, TailPolicy, gauss_legendre_panels, integrate_nested, integrate_semi_infinite,
    require_converged,
)
from specfun import (
    bessel_i, bessel_k_imag, bessel_k_imag_grid, bessel_k_real, gamma_abs2, gamma_prod_abs2,
    k0_upper_bound, log_gamma_abs2, log_gamma_prod_abs2, log_mu_density, mu_density,
)
from kernels import (
    MELLIN_X_HI, X_MIN, SpectralCache, cdh_transition_density, cdh_transition_density_T,
    cdh_transition_measure, hartman_watson_theta, hartman_watson_theta_array,
    hartman_watson_theta_on_grid, heat_kernel_p, heat_kernel_via_theta, kl_inverse,
    log_cdh_transition_density, macdonald_rhs, mellin_k, mellin_k_product, q_tilde_apply,
)
from measures import (
    Params, H_fun, cdh_poly_table, entrance_density_u, entrance_laplace, entrance_law_p,
    favard_check, h_fun, harmonic_weight, laplace_C_closed, laplace_C_numeric,
    normalizing_C, normalizing_C_quad, normalizing_K, phi_density,
)
from processes import (
    KPZ_TAU, SamplerConfig, check_kpz_range, laplace_estimate, path_matrix, sample_H_kpz, sample_Y,
)

logger = logging.getLogger(__name__)


PROFILES = ('fast', 'thorough')
PSI_ROUTES = ('cdh_quadrature', 'y_quadrature', 'y_montecarlo')

# default tolerance classes; run_suite accepts overrides keyed the same way
DEFAULT_TOLERANCES = {'closed_form': 1e-7, 'nested': 1e-5, 'mc_sigmas': 3.0}
FAST_INSTANCES = 1
THOROUGH_INSTANCES = 6

# x-space tensor grid shared by the quadrature-on-a-grid checks
X_PANEL = 0.25
X_CACHE_TOL = 1e-13

# tensor u-grid of the dual chain
DUAL_PANEL = 0.25
DUAL_U_MAX = 80.0

THETA_T_LO = 0.08


@dataclass
class IdentityReport:
    """Outcome of one identity check.

    ``passed`` holds rel_err <= tol or abs_err <= tol * scale; it is written
    as "pass" when serialized.
    """

    id: str
    args: Dict
    lhs: float
    rhs: float
    abs_err: float
    rel_err: float
    tol: float
    passed: bool
    diagnostics: Dict = field(default_factory=dict)

    def to_dict(self):
        return {
            'id': self.id,
            'args': dict(self.args),
            'lhs': self.lhs,
            'rhs': self.rhs,
            'abs_err': self.abs_err,
            'rel_err': self.rel_err,
            'tol': self.tol,
            'pass': self.passed,
            'diagnostics': dict(self.diagnostics),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(id=data['id'], args=dict(data.get('args', {})), lhs=float(data['lhs']),
                   rhs=float(data['rhs']), abs_err=_error_value(data['abs_err']),
                   rel_err=_error_value(data['rel_err']), tol=float(data['tol']),
                   passed=bool(data['pass']), diagnostics=dict(data.get('diagnostics', {})))



def _error_value(value):
    """Errors serialized as null stand for an unbounded error."""
    return math.inf if value is None else float(value)

@dataclass(frozen=True)
class CatalogEntry:
    """One verifiable identity.

    ``evaluate`` maps an argument dict to a dict with 'lhs' and 'rhs' and
    optionally 'kind' ('eq', 'le', 'lt', 'ge'), 'scale' and 'diagnostics'.
    ``tol`` is a number or a key of DEFAULT_TOLERANCES.
    """

    id: str
    statement: str
    evaluate: Callable = field(repr=False)
    panel: Tuple[Dict, ...] = ()
    tol: object = 'closed_form'


def make_report(identity, args, lhs, rhs, tol, kind='eq', scale=1.0, diagnostics=None):
    """Build an IdentityReport from the two sides.

    For kind 'le' (lhs <= rhs), 'lt' (lhs < rhs) and 'ge' (lhs >= rhs) abs_err is
    the size of the violation, zero when the inequality holds. A strict
    inequality fails on equality whatever the tolerance.
    """
    lhs = float(lhs)
    rhs = float(rhs)
    diagnostics = dict(diagnostics or {})
    if not (math.isfinite(lhs) and math.isfinite(rhs)):
        raise NonConvergenceError(f"{identity}: non-finite side (lhs={lhs}, rhs={rhs})")
    if kind == 'eq':
        abs_err = abs(lhs - rhs)
    elif kind in ('le', 'lt'):
        abs_err = max(0.0, lhs - rhs)
    elif kind == 'ge':
        abs_err = max(0.0, rhs - lhs)
    else:
        raise DomainError(f"unknown comparison kind {kind!r}")
    if rhs != 0.0:
        rel_err = abs_err / abs(rhs)
    else:
        rel_err = 0.0 if abs_err == 0.0 else math.inf
    passed = rel_err <= tol or abs_err <= tol * scale
    if kind == 'lt' and not lhs < rhs:
        passed = False
    if kind != 'eq':
        diagnostics.setdefault('kind', kind)
    if scale != 1.0:
        diagnostics.setdefault('scale', float(scale))
    return IdentityReport(id=identity, args=dict(args), lhs=lhs, rhs=rhs, abs_err=abs_err,
                          rel_err=rel_err, tol=float(tol), passed=bool(passed),
                          diagnostics=diagnostics)


def failed_report(identity, args, tol, exc):
    """Report for an entry that raised; the error goes into diagnostics."""
    diagnostics = {'error': f"{type(exc).__name__}: {exc}"}
    result = getattr(exc, 'result', None)
    if isinstance(result, QuadResult):
        diagnostics['partial_value'] = result.value
        diagnostics['partial_err_est'] = result.err_est
    return IdentityReport(id=identity, args=dict(args or {}), lhs=0.0, rhs=0.0, abs_err=math.inf,
                          rel_err=math.inf, tol=float(tol), passed=False,
                          diagnostics=diagnostics)


# ---------------------------------------------------------------------------
# Shared grids
# ---------------------------------------------------------------------------

@lru_cache(maxsize=8)
def _x_space(t_min, refined=False):
    """(cache, x_weights) on the composite Gauss-Legendre grid over [X_MIN, MELLIN_X_HI]."""
    x, w = gauss_legendre_panels(X_MIN, MELLIN_X_HI, X_PANEL)
    cache = SpectralCache.build(x, t_min=t_min, tol=X_CACHE_TOL)
    if refined:
        cache = cache.refine()
    w.setflags(write=False)
    return cache, w


def _row_at(cache, x, t):
    """p_t(x, y_j) for the cache's grid points y_j."""
    point = cache.with_x_grid(np.array([float(x)]))
    return point.kernel_between(t, cache)[0]


def _propagate(cache, weights, g, t):
    """y -> int g(x) p_t(x, y) dx on the grid, through the spectral side."""
    coef = ((weights * g) @ cache.k_values) * np.exp(-t * cache.u_grid ** 2)
    return cache.inverse(coef)


def _cdh_in_u(s, t, us, v, c):
    """q_{s,t}(u, v) for an array of starting points u and one v."""
    us = np.atleast_1d(np.asarray(us, dtype=float))
    out = np.zeros(us.shape)
    for i, u in enumerate(us):
        if u > 0:
            out[i] = float(cdh_transition_density(s, t, u, np.array([v]), c)[0])
    return out


def _mellin_closed(s, u):
    return 2.0 ** (s - 2.0) * gamma_abs2(0.5 * (s + 1j * u))


# ---------------------------------------------------------------------------
# Laplace transform psi of Y
# ---------------------------------------------------------------------------

def _psi_chain(svec, tvec, tau):
    """Exponents sigma and Y-times T for psi^tau(s, t).

    A trailing sigma = 0 segment on [tau t_d, tau] is added when t_d < 1.
    """
    svec = [float(s) for s in np.atleast_1d(svec)]
    tvec = [float(t) for t in np.atleast_1d(tvec)]
    if not svec or len(svec) != len(tvec):
        raise GridError("svec and tvec must be non-empty and of equal length")
    if any(b >= a for a, b in zip(svec, svec[1:])):
        raise GridError("svec must be strictly decreasing")
    if any(b <= a for a, b in zip(tvec, tvec[1:])) or not (0.0 < tvec[0] and tvec[-1] <= 1.0):
        raise GridError("tvec must be strictly increasing in (0, 1]")
    sigma = list(svec)
    times = [tau * t for t in tvec]
    if tvec[-1] < 1.0:
        sigma.append(0.0)
        times.append(tau)
    else:
        times[-1] = tau
    return sigma, times


def _y_exponents(sigma, params):
    """Exponents of e^{x_k} in the Y-side integrand, k = 0..m."""
    out = [params.c - sigma[0]]
    out.extend(sigma[k] - sigma[k + 1] for k in range(len(sigma) - 1))
    out.append(params.a + sigma[-1])
    return out


def _y_chain_value(sigma, gaps, params, cache, weights):
    exponents = _y_exponents(sigma, params)
    x = cache.x_grid
    g = np.exp(exponents[0] * x)
    for k, gap in enumerate(gaps):
        g = _propagate(cache, weights, g, gap) * np.exp(exponents[k + 1] * x)
    return float(np.sum(weights * g))


def y_laplace_quadrature(sigma, times, params, C=None):
    """E[exp(sum_k sigma_k (Y_{T_k} - Y_{T_{k-1}}))] with T_0 = 0 and T_m = tau.

    The joint density of Y is integrated on the x-space tensor grid, each
    heat-kernel step applied through the spectral side of a SpectralCache.
    The error estimate is the change under a refined u-grid.

    Returns:
        QuadResult
    """
    times = np.asarray(times, dtype=float)
    gaps = np.diff(np.concatenate(([0.0], times)))
    if np.any(gaps <= 0) or abs(times[-1] - params.tau) > 1e-12 * params.tau:
        raise GridError("Y-side chain needs increasing times ending at tau")
    if C is None:
        C = normalizing_C(params)
    t_min = float(gaps.min())
    cache, weights = _x_space(t_min)
    fine_cache, _ = _x_space(t_min, refined=True)
    coarse = _y_chain_value(sigma, gaps, params, cache, weights) / C
    fine = _y_chain_value(sigma, gaps, params, fine_cache, weights) / C
    err = abs(fine - coarse)
    logger.debug("Y chain sigma=%s: %.12g (u-refinement change %.2e)", sigma, fine, err)
    return QuadResult(value=fine, err_est=err, evals=2 * cache.k_values.size,
                      converged=err <= 1e-8 * max(1.0, abs(fine)))


def _dual_initial(sigma_last, u, params, C):
    if sigma_last == 0.0 and params.a > 0:
        # p_0 / K: the entrance law at time 0 with its normalization
        return entrance_density_u(0.0, u, params) / normalizing_K(params)
    return phi_density(sigma_last, u, params, C=C)


def _dual_chain_value(sigma, gaps, params, C, panel):
    u_top = min(math.sqrt(math.log(1e16) / float(min(gaps))) + 8.0, DUAL_U_MAX)
    u, w = gauss_legendre_panels(0.0, u_top, panel)
    m = len(sigma)
    f = _dual_initial(sigma[-1], u, params, C) * np.exp(-gaps[-1] * u * u)
    for k in range(m - 2, -1, -1):
        s_from, s_to = sigma[k + 1], sigma[k]
        q = np.array([np.exp(log_cdh_transition_density(s_from, s_to, ui, u, params.c)) for ui in u])
        f = ((w * f) @ q) * np.exp(-gaps[k] * u * u)
    return float(np.sum(w * f)), u.size


def dual_laplace_quadrature(sigma, times, params, C=None):
    """Z-side form of the same Laplace transform:

        int phi_{sigma_m}(u_m) e^{-D_m u_m^2} prod_k q_{sigma_{k+1}, sigma_k}(u_{k+1}, u_k) e^{-D_k u_k^2}

    with D_k = T_k - T_{k-1}; needs c > sigma_1 > ... > sigma_m > -a. A
    trailing sigma_m = 0 with a > 0 uses p_0 / K for the initial density.

    Returns:
        QuadResult (error from halving the panel width)
    """
    sigma = [float(s) for s in sigma]
    if any(b >= a for a, b in zip(sigma, sigma[1:])):
        raise RangeError("dual chain needs strictly decreasing exponents")
    if not (params.c > sigma[0] and sigma[-1] > -params.a):
        raise RangeError(f"dual chain needs c > sigma_1 and sigma_m > -a, got {sigma}")
    times = np.asarray(times, dtype=float)
    gaps = np.diff(np.concatenate(([0.0], times)))
    if np.any(gaps <= 0):
        raise GridError("dual chain needs increasing times")
    if C is None:
        C = normalizing_C(params)
    panel = DUAL_PANEL
    if len(sigma) > 1:
        panel = min(panel, 0.5 * min(a - b for a, b in zip(sigma, sigma[1:])))
    coarse, n_coarse = _dual_chain_value(sigma, gaps, params, C, panel)
    fine, n_fine = _dual_chain_value(sigma, gaps, params, C, 0.5 * panel)
    err = abs(fine - coarse)
    logger.debug("dual chain sigma=%s: %.12g (panel-halving change %.2e)", sigma, fine, err)
    return QuadResult(value=fine, err_est=err, evals=n_coarse ** 2 + n_fine ** 2,
                      converged=err <= 1e-8 * max(1.0, abs(fine)))


def _check_cdh_route(svec, sigma, params):
    if len(svec) > 2:
        raise RouteDomain(f"cdh_quadrature supports d <= 2, got d={len(svec)}")
    if not (params.c > svec[0] and svec[-1] > max(-params.a, 0.0)):
        # s_d > 0 might be reachable by analytic continuation; not attempted
        raise RouteDomain(f"cdh_quadrature needs c > s_1 > ... > s_d > max(-a, 0), got {svec}")
    if sigma[-1] == 0.0 and not params.a > 0:
        raise RouteDomain("cdh_quadrature with t_d < 1 needs a > 0 (atom-free entrance law)")


def compute_psi(svec, tvec, params, route='y_quadrature', n_paths=100000, config=None):
    """psi^tau(s, t) = E[exp(-sum_k (s_k - s_{k+1}) (Y_0 - Y_{tau t_k}))], s_{d+1} = 0.

    Args:
        svec: strictly decreasing s_1 > ... > s_d
        tvec: strictly increasing times in (0, 1]
        route: one of PSI_ROUTES
        n_paths, config: Monte Carlo settings for 'y_montecarlo'

    Returns:
        QuadResult; for 'y_montecarlo' err_est is the standard error

    Raises:
        RouteDomain: arguments outside the route's domain
    """
    sigma, times = _psi_chain(svec, tvec, params.tau)
    svec = sigma[:len(np.atleast_1d(svec))]
    if route == 'cdh_quadrature':
        _check_cdh_route(svec, sigma, params)
        return dual_laplace_quadrature(sigma, times, params)
    if route == 'y_quadrature':
        return y_laplace_quadrature(sigma, times, params)
    if route == 'y_montecarlo':
        config = config or SamplerConfig()
        y_times = [0.0] + list(times)
        paths = sample_Y(y_times, n_paths, config, params)
        values = path_matrix(paths)
        stat = np.exp(np.diff(values, axis=1) @ np.asarray(sigma))
        mean, stderr = laplace_estimate(stat)
        return QuadResult(value=mean, err_est=stderr, evals=n_paths, converged=True)
    raise RouteDomain(f"unknown route {route!r}; expected one of {', '.join(PSI_ROUTES)}")


def check_kpz_laplace_mc(svec, tvec, a, c, n_paths, seed, config=None, psi_route='y_quadrature',
                         sigmas=DEFAULT_TOLERANCES['mc_sigmas']):
    """Monte Carlo check of E[exp(-sum_k (s_k - s_{k+1}) H(t_k))] against
    exp(sum_k (t_k - t_{k-1}) s_k^2 / 4) psi^{1/4}(s, t).

    Passes when the two sides agree within ``sigmas`` combined standard errors.

    Raises:
        RangeError: a + c <= 0, min(a, c) <= -2 or s not positive
        GridError: t_d != 1
    """
    svec = [float(s) for s in np.atleast_1d(svec)]
    tvec = [float(t) for t in np.atleast_1d(tvec)]
    check_kpz_range(a, c)
    if any(s <= 0 for s in svec):
        raise RangeError("check_kpz_laplace_mc needs positive s")
    if not tvec or tvec[-1] != 1.0:
        raise GridError("check_kpz_laplace_mc needs t_d = 1")
    args = {'s': svec, 't': tvec, 'a': a, 'c': c, 'n_paths': int(n_paths), 'seed': int(seed)}

    cfg = replace(config or SamplerConfig(), seed=int(seed))
    paths = sample_H_kpz([0.0] + tvec, int(n_paths), cfg, a, c)
    heights = path_matrix(paths)[:, 1:]
    coeffs = np.asarray(svec) - np.append(svec[1:], 0.0)
    mean, stderr = laplace_estimate(np.exp(-(heights @ coeffs)))

    psi = compute_psi(svec, tvec, Params(a=a, c=c, tau=KPZ_TAU), route=psi_route)
    gaps = np.diff(np.concatenate(([0.0], tvec)))
    gauss = math.exp(0.25 * float(np.sum(gaps * np.asarray(svec) ** 2)))
    rhs = gauss * psi.value
    combined = math.hypot(stderr, gauss * psi.err_est)
    # both pass conditions reduce to |mean - rhs| <= sigmas * combined
    band = sigmas * combined
    report = make_report('KPZ_LAPLACE_MC', args, mean, rhs, band / abs(rhs), scale=abs(rhs),
                         diagnostics={'stderr': stderr, 'psi': psi.value, 'psi_err': psi.err_est,
                                      'psi_route': psi_route, 'sigmas': sigmas,
                                      'combined_stderr': combined})
    logger.info("KPZ Laplace MC: %.6f +/- %.6f vs %.6f (%s)", mean, stderr, rhs,
                "pass" if report.passed else "FAIL")
    return report


# ---------------------------------------------------------------------------
# Catalog entries
# ---------------------------------------------------------------------------

def _mellin_single(args):
    s, u = args['s'], args['u']
    res = require_converged(mellin_k(s, u), "Mellin transform of K")
    return {'lhs': res.value, 'rhs': _mellin_closed(s, u), 'diagnostics': {'err_est': res.err_est}}


def _mellin_product(args):
    t, u, v = args['t'], args['u'], args['v']
    res = require_converged(mellin_k_product(t, u, v), "Mellin transform of K K")
    rhs = 2.0 ** (t - 3.0) / math.gamma(t) * gamma_prod_abs2(
        [0.5 * (t + 1j * (u + v)), 0.5 * (t + 1j * (u - v))])
    return {'lhs': res.value, 'rhs': rhs, 'diagnostics': {'err_est': res.err_est}}


def _mu_forms(args):
    u = args['u']
    return {'lhs': mu_density(u), 'rhs': (2.0 / math.pi) / gamma_abs2(1j * u)}


def _p_symmetry(args):
    t, x, y = args['t'], args['x'], args['y']
    return {'lhs': heat_kernel_p(t, x, y), 'rhs': heat_kernel_p(t, y, x)}


def _p_subprob(args):
    t, x = args['t'], args['x']
    cache, weights = _x_space(t)
    mass = float(np.sum(weights * _row_at(cache, x, t)))
    return {'lhs': mass, 'rhs': 1.0, 'kind': 'lt',
            'diagnostics': {'mass': mass, 'deficit': 1.0 - mass}}


def _p_chapkol(args):
    s, t, x, y = args['s'], args['t'], args['x'], args['y']
    cache, weights = _x_space(min(s, t))
    lhs = float(np.sum(weights * _row_at(cache, x, s) * _row_at(cache, y, t)))
    return {'lhs': lhs, 'rhs': heat_kernel_p(s + t, x, y)}


def _q_norm(args):
    measure = cdh_transition_measure(args['s'], args['t'], args['x'], args['c'])
    return {'lhs': measure.total_mass(), 'rhs': 1.0}


def _q_chapkol(args):
    r, s, t, u, w, c = (args[k] for k in ('r', 's', 't', 'u', 'w', 'c'))
    res = integrate_semi_infinite(
        lambda v: cdh_transition_density(r, s, u, v, c) * _cdh_in_u(s, t, v, w, c), 0.0,
        tol=1e-12, tail=TailPolicy.exponential(0.5 * math.pi), rel_tol=1e-11)
    res = require_converged(res, "CDH Chapman-Kolmogorov integral")
    rhs = float(cdh_transition_density(r, t, u, np.array([w]), c)[0])
    return {'lhs': res.value, 'rhs': rhs, 'diagnostics': {'err_est': res.err_est}}


def _wilson_beta(args):
    cs = [args['c1'], args['c2'], args['c3']]

    def integrand(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        pos = x > 0
        xp = x[pos]
        out[pos] = np.exp(log_gamma_prod_abs2(*[cj + 1j * xp for cj in cs])
                          - log_gamma_abs2(2j * xp))
        return out

    res = integrate_semi_infinite(integrand, 0.0, tol=1e-12, rel_tol=1e-12,
                                  tail=TailPolicy.exponential(0.5 * math.pi))
    res = require_converged(res, "Beta integral")
    rhs = 2.0 * math.pi * math.gamma(cs[0] + cs[1]) * math.gamma(cs[0] + cs[2]) \
        * math.gamma(cs[1] + cs[2])
    return {'lhs': res.value, 'rhs': rhs, 'diagnostics': {'err_est': res.err_est}}


def _params(args):
    return Params(a=args['a'], c=args['c'], tau=args.get('tau', 1.0))


def _entrance_q(args):
    params = _params(args)
    s, t, v = args['s'], args['t'], args['v']
    C = normalizing_C(params)
    res = integrate_semi_infinite(
        lambda u: phi_density(s, u, params, C=C) * _cdh_in_u(s, t, u, v, params.c), 0.0,
        tol=1e-12, tail=TailPolicy.exponential(0.5 * math.pi), rel_tol=1e-11)
    res = require_converged(res, "entrance law integral")
    return {'lhs': res.value, 'rhs': phi_density(t, v, params, C=C),
            'diagnostics': {'err_est': res.err_est}}


def _entrance_t(args):
    params = _params(args)
    s, t, y = args['s'], args['t'], args['y']
    if not params.a + s > 0:
        raise RangeError("ENTRANCE_T checks the atom-free case a + s > 0")

    def integrand(u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        trans = np.array([float(cdh_transition_density_T(s, t, ui * ui, np.array([y]), params.c)[0])
                          if ui > 0 else 0.0 for ui in u])
        return entrance_density_u(s, u, params) * trans

    res = integrate_semi_infinite(integrand, 0.0, tol=1e-12, rel_tol=1e-11,
                                  tail=TailPolicy.exponential(0.5 * math.pi))
    res = require_converged(res, "entrance law integral (T coordinates)")
    rhs = entrance_law_p(t, params).density(y)
    return {'lhs': res.value, 'rhs': rhs, 'diagnostics': {'err_est': res.err_est}}


def _macdonald(args):
    u, x, y = args['u'], args['x'], args['y']
    lhs = bessel_k_imag(u, math.exp(x)) * bessel_k_imag(u, math.exp(y))
    res = require_converged(macdonald_rhs(u, x, y), "Macdonald integral")
    return {'lhs': lhs, 'rhs': res.value, 'diagnostics': {'err_est': res.err_est}}


def _theta_consist(args):
    r, t = args['r'], args['t']
    return {'lhs': hartman_watson_theta(r, t, method='spectral'),
            'rhs': hartman_watson_theta(r, t, method='oscillatory')}


def _theta_my1(args):
    lam, r = args['lam'], args['r']
    t_hi = THETA_T_LO + 2.0 * math.log(1e14) / lam ** 2
    t, w = gauss_legendre_panels(THETA_T_LO, t_hi, 0.25)
    theta = hartman_watson_theta_array(r, t)
    lhs = float(np.sum(w * np.exp(-0.5 * lam * lam * t) * theta))
    return {'lhs': lhs, 'rhs': bessel_i(lam, r),
            'diagnostics': {'theta_at_t_lo': float(theta[0]), 't_range': [THETA_T_LO, t_hi]}}


def _theta_my2(args):
    x, t = args['x'], args['t']
    rho, w = gauss_legendre_panels(X_MIN, math.log(50.0 / x), 0.25)
    theta = hartman_watson_theta_on_grid(rho, t)
    lhs = float(np.sum(w * np.exp(-x * np.exp(rho)) * theta))
    rhs = math.exp(-math.acosh(x) ** 2 / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)
    return {'lhs': lhs, 'rhs': rhs, 'diagnostics': {'theta_at_r_lo': float(theta[0])}}


def _p_via_theta(args):
    t, x, y = args['t'], args['x'], args['y']
    return {'lhs': heat_kernel_p(t, x, y), 'rhs': heat_kernel_via_theta(t, x, y)}


def _c_paths(args):
    params = _params(args)
    spectral = normalizing_C_quad(params, method='spectral')
    direct = normalizing_C_quad(params, method='direct2d')
    diagnostics = {'spectral_err': spectral.err_est, 'direct2d_err': direct.err_est}
    if min(params.a, params.c) > -1.0:
        try:
            diagnostics['hartman_watson'] = normalizing_C(params, method='hartman_watson')
        except KpzNumericsError as exc:
            diagnostics['hartman_watson_error'] = f"{type(exc).__name__}: {exc}"
    return {'lhs': spectral.value, 'rhs': direct.value, 'diagnostics': diagnostics}


def _c_laplace(args):
    a, c, lam = args['a'], args['c'], args['lam']
    res = require_converged(laplace_C_numeric(a, c, lam), "Laplace transform of C")
    return {'lhs': res.value, 'rhs': laplace_C_closed(a, c, lam),
            'diagnostics': {'err_est': res.err_est}}


def _k_relation(args):
    params = _params(args)
    s = args.get('s', 0.0)
    lhs = entrance_laplace(s, params)
    if s == 0.0:
        rhs = normalizing_K(params)
    else:
        total = params.a + params.c
        rhs = total * (total + 2.0) / 2.0 ** (total + 1.0) * normalizing_C(params.shifted(s))
    return {'lhs': lhs, 'rhs': rhs}


def _c_continuity(args):
    a0, c, tau, eps = args['a0'], args['c'], args['tau'], args['eps']
    left = normalizing_C(Params(a=a0 - eps, c=c, tau=tau))
    right = normalizing_C(Params(a=a0 + eps, c=c, tau=tau))
    return {'lhs': left, 'rhs': right}


def _parseval(args):
    b, delta = args['b'], args['delta']
    cache, weights = _x_space(delta)
    inverse = cache.inverse(np.exp(-delta * cache.u_grid ** 2))
    lhs = float(np.sum(weights * np.exp(b * cache.x_grid) * inverse))
    res = integrate_semi_infinite(
        lambda u: np.exp(-delta * u * u) * 2.0 ** (b - 2.0)
        * np.exp(log_gamma_abs2(0.5 * (b + 1j * np.asarray(u)))) * mu_density(u),
        0.0, tol=1e-13, tail=TailPolicy.gaussian(delta), rel_tol=1e-12)
    res = require_converged(res, "Parseval spectral side")
    return {'lhs': lhs, 'rhs': res.value, 'diagnostics': {'err_est': res.err_est}}


def _assoc_k(args):
    delta, x, b = args['delta'], args['x'], args['b']
    cache, weights = _x_space(delta)
    lhs = float(np.sum(weights * _row_at(cache, x, delta) * np.exp(b * cache.x_grid)))
    return {'lhs': lhs, 'rhs': harmonic_weight(0.0, x, b, delta)}


def _assoc_k2(args):
    delta, u, damping = args['delta'], args['u'], args['damping']
    res = q_tilde_apply(lambda v: np.exp(-damping * np.asarray(v) ** 2), delta, u,
                        tail=TailPolicy.gaussian(damping))
    res = require_converged(res, "dual kernel integral")
    cache, weights = _x_space(damping)
    inverse = cache.inverse(np.exp(-damping * cache.u_grid ** 2))
    k_col = bessel_k_imag_grid([u], np.exp(cache.x_grid))[:, 0]
    rhs = float(np.sum(weights * np.exp(delta * cache.x_grid) * inverse * k_col))
    return {'lhs': res.value, 'rhs': rhs, 'diagnostics': {'err_est': res.err_est}}


def _intertwine(args):
    s, t, u, b = args['s'], args['t'], args['u'], args['b']
    cache, weights = _x_space(t)
    x = cache.x_grid
    smoothed = _propagate(cache, weights, np.exp(b * x), t)
    k_col = bessel_k_imag_grid([u], np.exp(x))[:, 0]
    lhs = float(np.sum(weights * np.exp(s * x) * smoothed * k_col))

    def transformed(v):
        v = np.asarray(v, dtype=float)
        return np.exp(-t * v * v) * 2.0 ** (b - 2.0) * np.exp(log_gamma_abs2(0.5 * (b + 1j * v)))

    res = require_converged(q_tilde_apply(transformed, s, u, tail=TailPolicy.gaussian(t)),
                            "intertwined dual kernel integral")
    return {'lhs': lhs, 'rhs': res.value, 'diagnostics': {'err_est': res.err_est}}


def _h_harmonic(args):
    params = _params(args)
    s, t, x = args['s'], args['t'], args['x']
    if not 0.0 <= s < t <= params.tau:
        raise DomainError("H_HARMONIC needs 0 <= s < t <= tau")
    lhs = H_fun(s, x, params)
    t_min = t - s if t == params.tau else min(t - s, params.tau - t)
    cache, weights = _x_space(t_min)
    if t == params.tau:
        harmonic = np.exp(params.c * cache.x_grid)
    else:
        damp = np.exp(-(params.tau - t) * cache.u_grid ** 2)
        harmonic = cache.inverse(damp * h_fun(0.0, cache.u_grid, params.c))
    rhs = float(np.sum(weights * _row_at(cache, x, t - s) * harmonic))
    return {'lhs': lhs, 'rhs': rhs}


def _dual_d0(args):
    params = _params(args)
    s = args['s']
    C = normalizing_C(params)
    res = integrate_semi_infinite(
        lambda u: phi_density(s, u, params, C=C) * np.exp(-params.tau * np.asarray(u) ** 2), 0.0,
        tol=1e-13, tail=TailPolicy.gaussian(params.tau), rel_tol=1e-12)
    res = require_converged(res, "dual representation, d = 0")
    shifted = normalizing_C_quad(params.shifted(s), method='direct2d')
    return {'lhs': res.value, 'rhs': shifted.value / C,
            'diagnostics': {'err_est': res.err_est, 'direct2d_err': shifted.err_est}}


def _two_step_dual_integral(params, s1, s2, t1):
    """C times the two-step dual chain, as a nested integral over (u1, u2)."""
    delta = s1 - s2
    d1, d2 = t1, params.tau - t1
    log_front = (params.a + params.c) * math.log(2.0) - math.log(16.0) - math.log(8.0) \
        - math.lgamma(delta)

    def integrand(u1, u2):
        u2 = np.asarray(u2, dtype=float)
        out = np.zeros(u2.shape)
        pos = u2 > 0
        if u1 <= 0 or not np.any(pos):
            return out
        v = u2[pos]
        log_val = (log_front - d1 * u1 * u1 - d2 * v * v
                   + log_gamma_prod_abs2(0.5 * (params.a + s2 + 1j * v),
                                         0.5 * (params.c - s1 + 1j * u1),
                                         0.5 * (delta + 1j * (u1 - v)),
                                         0.5 * (delta + 1j * (u1 + v)))
                   + log_mu_density(u1) + log_mu_density(v))
        out[pos] = np.exp(log_val)
        return out

    return integrate_nested(integrand, [(0.0, TailPolicy.gaussian(d1)),
                                        (0.0, TailPolicy.gaussian(d2))], tol=1e-10, rel_tol=1e-9)


def _dual_d1(args):
    params = _params(args)
    s1, s2, t1 = args['s1'], args['s2'], args['t1']
    if not (params.c > s1 > s2 > -params.a):
        raise RangeError("DUAL_D1 needs c > s1 > s2 > -a")
    if not 0.0 < t1 < params.tau:
        raise GridError("DUAL_D1 needs 0 < t1 < tau")
    C = normalizing_C(params)
    res = require_converged(_two_step_dual_integral(params, s1, s2, t1), "two-step dual integral")
    y_side = y_laplace_quadrature([s1, s2], [t1, params.tau], params, C=C)
    return {'lhs': res.value / C, 'rhs': y_side.value,
            'diagnostics': {'err_est': res.err_est / C, 'y_err': y_side.err_est}}


def _psi_dual(args):
    params = _params(args)
    cdh = compute_psi(args['s'], args['t'], params, route='cdh_quadrature')
    ys = compute_psi(args['s'], args['t'], params, route='y_quadrature')
    return {'lhs': cdh.value, 'rhs': ys.value,
            'diagnostics': {'cdh_err': cdh.err_est, 'y_err': ys.err_est}}


def _cond_dual(args):
    params = _params(args)
    s0, s1, t1, x = args['s0'], args['s1'], args['t1'], args['x']
    c, tau = params.c, params.tau
    if not s0 < s1 < c:
        raise RangeError("COND_DUAL needs s0 < s1 < c")
    if not 0.0 < t1 < tau:
        raise GridError("COND_DUAL needs 0 < t1 < tau")
    rest = tau - t1

    cache, weights = _x_space(min(t1, rest))
    grid = cache.x_grid
    terminal = cache.inverse(np.exp(-rest * cache.u_grid ** 2) * h_fun(s1, cache.u_grid, c))
    lhs = float(np.sum(weights * _row_at(cache, x, t1) * np.exp((s1 - s0) * grid) * terminal))

    v, wv = gauss_legendre_panels(0.0, math.sqrt(math.log(1e16) / rest) + 8.0,
                                  min(DUAL_PANEL, 0.5 * (s1 - s0)))
    damp_v = wv * np.exp(-rest * v * v)

    def spectral(u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        g = np.array([float(np.sum(damp_v * np.exp(log_cdh_transition_density(s0, s1, ui, v, c))))
                      for ui in u])
        return h_fun(s0, u, c) * g

    res = kl_inverse(spectral, x, t1, bound=h_fun(s0, 0.0, c))
    res = require_converged(res, "conditional dual representation")
    return {'lhs': lhs, 'rhs': res.value, 'diagnostics': {'err_est': res.err_est}}


def _cdh_orthogonality_params(s, t, x, c):
    alpha = 0.5 * (c - t)
    root = math.sqrt(x)
    beta = complex(0.5 * (t - s), 0.5 * root)
    return alpha, beta, beta.conjugate()


def _cdh_ortho(args):
    n, m = int(args['n']), int(args['m'])
    s, t, x, c = args['s'], args['t'], args['x'], args['c']
    alpha, beta, gamma = _cdh_orthogonality_params(s, t, x, c)
    measure = cdh_transition_measure(s, t, x, c)
    top = max(n, m)

    def moment(i, j):
        return measure.expect(lambda y: np.prod(
            cdh_poly_table(top, 0.25 * np.asarray(y), alpha, beta, gamma)[[i, j]], axis=0),
            tail_rate=1.0)

    cross = moment(n, m)
    scale = math.sqrt(moment(n, n) * moment(m, m))
    return {'lhs': cross / scale, 'rhs': 0.0,
            'diagnostics': {'cross_moment': cross, 'norm_product': scale}}


def _favard(args):
    alpha, beta, gamma = _cdh_orthogonality_params(args['s'], args['t'], args['x'], args['c'])
    products, ok = favard_check(alpha, beta, gamma, int(args['n']))
    return {'lhs': min(products), 'rhs': 0.0, 'kind': 'ge',
            'diagnostics': {'products': [float(p) for p in products], 'ok': ok}}


def _k0_bounds(args):
    u = np.linspace(0.0, args['u_max'], int(args['points']))
    z = np.geomspace(args['z_lo'], args['z_hi'], int(args['points']))
    k = bessel_k_imag_grid(u, z)
    k0 = bessel_k_real(0.0, z)
    worst = float(np.max(np.abs(k) / k0[:, None] - 1.0))
    large = z >= 1.0
    if np.any(large):
        worst = max(worst, float(np.max(k0[large] / k0_upper_bound(z[large]) - 1.0)))
    return {'lhs': worst, 'rhs': 0.0, 'kind': 'le', 'diagnostics': {'grid': [u.size, z.size]}}


_BASE = {'a': 1.0, 'c': 1.0, 'tau': 1.0}

CATALOG = {entry.id: entry for entry in (
    CatalogEntry('MELLIN_SINGLE', "int e^{sx} K_iu(e^x) dx = 2^{s-2} |Gamma((s+iu)/2)|^2",
                 _mellin_single, ({'s': 1.0, 'u': 0.0}, {'s': 1.5, 'u': 1.0},
                                  {'s': 0.5, 'u': 2.0}, {'s': 2.5, 'u': 5.0})),
    CatalogEntry('MELLIN_PRODUCT', "int e^{tx} K_iu K_iv dx = 2^{t-3} |Gamma(..)|^2 / Gamma(t)",
                 _mellin_product, ({'t': 1.0, 'u': 1.0, 'v': 2.0}, {'t': 2.0, 'u': 0.5, 'v': 0.5},
                                   {'t': 1.5, 'u': 3.0, 'v': 1.0})),
    CatalogEntry('MU_FORMS', "(2/pi) / |Gamma(iu)|^2 = (2/pi^2) u sinh(pi u)",
                 _mu_forms, ({'u': 1.0}, {'u': 0.01}, {'u': 7.5}), tol=1e-12),
    CatalogEntry('P_SYMMETRY', "p_t(x, y) = p_t(y, x)",
                 _p_symmetry, ({'t': 1.0, 'x': 0.3, 'y': -0.2}, {'t': 0.2, 'x': -3.0, 'y': 1.0},
                               {'t': 2.0, 'x': 0.0, 'y': 2.0}), tol=0.0),
    CatalogEntry('P_SUBPROB', "int p_t(x, y) dy < 1",
                 _p_subprob, ({'t': 1.0, 'x': 0.0}, {'t': 0.5, 'x': -2.0}, {'t': 2.0, 'x': 1.0},
                              {'t': 0.5, 'x': 0.5}, {'t': 1.5, 'x': -1.0}, {'t': 3.0, 'x': -0.5}),
                 tol=0.0),
    CatalogEntry('P_CHAPKOL', "int p_s(x, z) p_t(z, y) dz = p_{s+t}(x, y)",
                 _p_chapkol, ({'s': 0.5, 't': 0.5, 'x': 0.0, 'y': 0.3},
                              {'s': 0.3, 't': 0.7, 'x': -1.0, 'y': 0.5},
                              {'s': 1.0, 't': 0.5, 'x': 0.5, 'y': -0.5}), tol=1e-6),
    CatalogEntry('Q_NORM', "q_{s,t}(x, .) has total mass 1",
                 _q_norm, ({'s': 0.2, 't': 0.6, 'x': 1.5, 'c': 1.0},
                           {'s': -0.5, 't': 0.5, 'x': 0.3, 'c': 1.0},
                           {'s': 0.0, 't': 1.5, 'x': 4.0, 'c': 2.0}), tol=1e-8),
    CatalogEntry('Q_CHAPKOL', "int q_{r,s}(u, v) q_{s,t}(v, w) dv = q_{r,t}(u, w)",
                 _q_chapkol, ({'r': 0.1, 's': 0.4, 't': 0.7, 'u': 1.0, 'w': 1.3, 'c': 1.0},
                              {'r': -0.5, 's': 0.0, 't': 0.5, 'u': 0.5, 'w': 2.0, 'c': 1.0}),
                 tol=1e-6),
    CatalogEntry('ENTRANCE_Q', "int phi_s(u) q_{s,t}(u, v) du = phi_t(v)",
                 _entrance_q, (dict(_BASE, s=0.2, t=0.6, v=1.3),
                               dict(_BASE, a=1.5, c=0.7, s=-0.5, t=0.3, v=0.6)), tol='nested'),
    CatalogEntry('ENTRANCE_T', "int p_s(dx) p_{s,t}(x, y) = p_t(y) in T coordinates",
                 _entrance_t, (dict(_BASE, s=0.2, t=0.6, y=1.7),
                               dict(_BASE, a=1.5, c=0.7, s=-0.5, t=0.3, y=0.4)), tol='nested'),
    CatalogEntry('MACDONALD', "K_iu(e^x) K_iu(e^y) = Macdonald integral",
                 _macdonald, ({'u': 1.5, 'x': 0.2, 'y': -0.4}, {'u': 0.3, 'x': 1.0, 'y': 1.0},
                              {'u': 4.0, 'x': -1.0, 'y': 0.5}), tol=1e-7),
    CatalogEntry('THETA_CONSIST', "spectral theta = oscillatory theta",
                 _theta_consist, ({'r': 1.0, 't': 1.0}, {'r': 0.5, 't': 2.0}, {'r': 3.0, 't': 0.5}),
                 tol=1e-6),
    CatalogEntry('THETA_MY1', "int e^{-lam^2 t/2} theta(r, t) dt = I_lam(r)",
                 _theta_my1, ({'lam': 1.0, 'r': 1.0}, {'lam': 2.0, 'r': 0.5},
                              {'lam': 1.5, 'r': 2.0}), tol=1e-6),
    CatalogEntry('THETA_MY2', "int e^{-xr} theta(r, t) dr / r = exp(-arccosh(x)^2 / 2t) / sqrt(2 pi t)",
                 _theta_my2, ({'x': 1.0, 't': 1.0}, {'x': 1.0, 't': 0.5}, {'x': 1.0, 't': 2.0},
                              {'x': 2.0, 't': 1.0})),
    CatalogEntry('P_VIA_THETA', "spectral p_t = p_t via Hartman-Watson density",
                 _p_via_theta, ({'t': 0.5, 'x': 0.1, 'y': -0.3}, {'t': 1.0, 'x': 0.0, 'y': 0.0},
                                {'t': 1.0, 'x': 0.5, 'y': -0.5}, {'t': 2.0, 'x': -1.0, 'y': 0.5}),
                 tol=1e-6),
    CatalogEntry('C_PATHS', "spectral C = direct double integral C",
                 _c_paths, ({'a': 1.5, 'c': 0.7, 'tau': 1.0}, {'a': 1.0, 'c': 1.0, 'tau': 0.5},
                            {'a': 0.5, 'c': 2.0, 'tau': 2.0}), tol=1e-6),
    CatalogEntry('C_LAPLACE', "int e^{-lam^2 tau} C^tau dtau = closed form",
                 _c_laplace, ({'a': 0.7, 'c': 0.9, 'lam': 1.5}, {'a': -0.5, 'c': 1.5, 'lam': 1.0},
                              {'a': 0.3, 'c': 0.4, 'lam': 2.0}), tol=1e-4),
    CatalogEntry('K_RELATION', "int e^{-tau x} p_s(dx) = (a+c)(a+c+2)/2^{a+c+1} C_{a+s,c-s}",
                 _k_relation, (dict(_BASE, s=0.0), dict(_BASE, a=1.5, c=0.7, s=0.0),
                               dict(_BASE, s=0.3), dict(_BASE, a=0.5, c=1.5, s=-0.3)),
                 tol='nested'),
    CatalogEntry('PARSEVAL', "int e^{bx} K^{-1}G dx = int K[e^{bx}] G dmu",
                 _parseval, ({'b': 1.0, 'delta': 1.0}, {'b': 1.5, 'delta': 0.5},
                             {'b': 2.0, 'delta': 2.0}), tol='nested'),
    CatalogEntry('ASSOC_K', "int p_t(x, y) e^{by} dy = K^{-1}[e^{-t u^2} K e^{by}](x)",
                 _assoc_k, ({'delta': 0.5, 'x': 0.2, 'b': 1.0}, {'delta': 1.0, 'x': -1.0, 'b': 0.5},
                            {'delta': 0.3, 'x': 1.0, 'b': 2.0}), tol='nested'),
    CatalogEntry('ASSOC_K2', "int q~_t(u, v) G(v) dv = K[e^{tx} K^{-1} G](u)",
                 _assoc_k2, ({'delta': 0.5, 'u': 1.2, 'damping': 1.0},
                             {'delta': 1.0, 'u': 0.4, 'damping': 0.5},
                             {'delta': 1.5, 'u': 2.5, 'damping': 1.0}), tol='nested'),
    CatalogEntry('INTERTWINE', "K[e^{sx} P_t f] = q~_s K[P_t f]",
                 _intertwine, ({'s': 1.0, 't': 0.5, 'u': 1.0, 'b': 1.0},
                               {'s': 1.5, 't': 1.0, 'u': 0.5, 'b': 0.5},
                               {'s': 1.0, 't': 0.3, 'u': 2.0, 'b': 1.5}), tol='nested'),
    CatalogEntry('H_HARMONIC', "H_s(x) = int p_{t-s}(x, y) H_t(y) dy",
                 _h_harmonic, (dict(_BASE, s=0.2, t=0.6, x=0.1), dict(_BASE, s=0.0, t=1.0, x=-0.5),
                               dict(_BASE, a=0.5, c=1.5, tau=2.0, s=0.5, t=1.5, x=0.3)),
                 tol='nested'),
    CatalogEntry('DUAL_D0', "int e^{-tau u^2} phi_s(u) du = C_{a+s,c-s} / C_{a,c}",
                 _dual_d0, (dict(_BASE, s=0.3), dict(_BASE, a=1.5, c=0.7, s=0.6),
                            dict(_BASE, a=-0.5, c=2.0, s=0.6), dict(_BASE, s=0.1),
                            dict(_BASE, s=0.6), dict(_BASE, a=1.5, c=0.7, s=0.1),
                            dict(_BASE, a=1.5, c=0.7, s=0.3), dict(_BASE, a=-0.5, c=2.0, s=0.3)),
                 tol='nested'),
    CatalogEntry('DUAL_D1', "two-step dual integral = Y-side Laplace transform",
                 _dual_d1, (dict(_BASE, s1=0.6, s2=0.2, t1=0.5),
                            dict(_BASE, a=1.5, c=0.7, s1=0.4, s2=-0.6, t1=0.3),
                            dict(_BASE, tau=2.0, s1=0.8, s2=0.5, t1=1.2)), tol=1e-3),
    CatalogEntry('PSI_DUAL', "psi by the dual Hahn chain = psi by the Y-side integral",
                 _psi_dual, (dict(_BASE, s=[0.4], t=[0.5]), dict(_BASE, s=[0.6, 0.3], t=[0.4, 1.0]),
                             dict(_BASE, a=1.5, c=0.7, s=[0.5], t=[1.0])), tol=1e-3),
    CatalogEntry('COND_DUAL', "conditional Laplace transform = K^{-1} of the dual side",
                 _cond_dual, (dict(_BASE, s0=-0.3, s1=0.4, t1=0.4, x=0.0),
                              dict(_BASE, s0=0.1, s1=0.5, t1=0.6, x=-1.0),
                              dict(_BASE, a=1.5, c=0.7, s0=-0.5, s1=0.2, t1=0.5, x=0.5)),
                 tol=1e-4),
    CatalogEntry('CDH_ORTHO', "dual Hahn polynomials are orthogonal under the transition law",
                 _cdh_ortho, ({'n': 1, 'm': 2, 's': 0.1, 't': 0.5, 'x': 1.0, 'c': 1.0},
                              {'n': 1, 'm': 3, 's': 0.1, 't': 0.5, 'x': 1.0, 'c': 1.0},
                              {'n': 2, 'm': 3, 's': 0.1, 't': 0.5, 'x': 1.0, 'c': 1.0}), tol=1e-8),
    CatalogEntry('WILSON_BETA', "int prod |Gamma(c_j+ix)|^2 / |Gamma(2ix)|^2 dx = 2 pi prod Gamma(c_j+c_k)",
                 _wilson_beta, ({'c1': 0.3, 'c2': 0.5, 'c3': 0.7}, {'c1': 1.0, 'c2': 1.0, 'c3': 1.0},
                                {'c1': 0.2, 'c2': 1.5, 'c3': 0.9})),
    CatalogEntry('K0_BOUNDS', "|K_iu(z)| <= K_0(z) <= e^{-z} sqrt(pi / 2z) (z >= 1)",
                 _k0_bounds, ({'u_max': 10.0, 'z_lo': 0.01, 'z_hi': 20.0, 'points': 40},
                              {'u_max': 30.0, 'z_lo': 0.1, 'z_hi': 50.0, 'points': 60}), tol=1e-9),
    CatalogEntry('C_CONTINUITY', "a -> C^tau_{a,c} is continuous across residue boundaries",
                 _c_continuity, ({'a0': 0.0, 'c': 1.0, 'tau': 1.0, 'eps': 1e-5},
                                 {'a0': -2.0, 'c': 3.0, 'tau': 1.0, 'eps': 1e-5}), tol=1e-3),
    CatalogEntry('FAVARD', "recurrence products A_n C_{n+1} stay nonnegative",
                 _favard, ({'s': 0.1, 't': 0.5, 'x': 1.0, 'c': 1.0, 'n': 6},
                           {'s': -0.5, 't': 0.5, 'x': 4.0, 'c': 1.0, 'n': 10}), tol=0.0),
)}


# ---------------------------------------------------------------------------
# Running checks
# ---------------------------------------------------------------------------

def _lookup(identity):
    try:
        return CATALOG[identity]
    except KeyError:
        raise UnknownIdentity(f"unknown identity {identity!r}") from None


def entry_tolerance(entry, tolerances=None):
    """Numeric default tolerance of an entry, honoring class overrides."""
    if isinstance(entry.tol, str):
        table = dict(DEFAULT_TOLERANCES)
        table.update(tolerances or {})
        return float(table[entry.tol])
    return float(entry.tol)


def default_args(identity, profile='fast', fast_instances=FAST_INSTANCES,
                 thorough_instances=THOROUGH_INSTANCES):
    """Argument panel of an entry for the given profile."""
    entry = _lookup(identity)
    if profile not in PROFILES:
        raise DomainError(f"unknown profile {profile!r}; expected one of {', '.join(PROFILES)}")
    count = fast_instances if profile == 'fast' else thorough_instances
    return [dict(a) for a in entry.panel[:max(1, int(count))]]


def check_identity(identity, args=None, tol=None, tolerances=None):
    """Evaluate one catalog identity.

    Args:
        identity: catalog id
        args: argument dict; the entry's first panel instance when omitted
        tol: tolerance; the entry's default when omitted

    Returns:
        IdentityReport (a failed one when the evaluation raised)

    Raises:
        UnknownIdentity: id not in CATALOG
    """
    entry = _lookup(identity)
    args = dict(entry.panel[0]) if args is None else dict(args)
    tol = entry_tolerance(entry, tolerances) if tol is None else float(tol)
    started = time.perf_counter()
    try:
        sides = entry.evaluate(args)
        report = make_report(identity, args, sides['lhs'], sides['rhs'], tol,
                             kind=sides.get('kind', 'eq'), scale=sides.get('scale', 1.0),
                             diagnostics=sides.get('diagnostics'))
    except (KpzNumericsError, NotImplementedError) as exc:
        logger.warning("%s %s raised %s: %s", identity, args, type(exc).__name__, exc)
        report = failed_report(identity, args, tol, exc)
    report.diagnostics['seconds'] = round(time.perf_counter() - started, 3)
    logger.info("%s %s: rel_err %.2e (%s)", identity, args, report.rel_err,
                "pass" if report.passed else "FAIL")
    return report


def run_suite(selection='all', profile='fast', tolerances=None, fast_instances=FAST_INSTANCES,
              thorough_instances=THOROUGH_INSTANCES):
    """Run the selected identities on their default panels, in catalog order for 'all'.

    Unknown ids produce a failed report with UnknownIdentity in diagnostics.
    """
    ids = list(CATALOG) if selection in (None, 'all') else list(selection)
    reports = []
    for identity in ids:
        try:
            panel = default_args(identity, profile, fast_instances, thorough_instances)
        except KpzNumericsError as exc:
            reports.append(failed_report(identity, {}, 0.0, exc))
            continue
        for args in panel:
            reports.append(check_identity(identity, args, tolerances=tolerances))
    summary = summarize(reports)
    logger.info("suite (%s): %d of %d passed", profile, summary['passed'], summary['total'])
    return reports


def summarize(reports):
    return {'total': len(reports), 'passed': sum(1 for r in reports if r.passed)}
