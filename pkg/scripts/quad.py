"""
Deterministic quadrature engine.

Adaptive Gauss-Kronrod (7/15) integration on finite intervals, truncation
plus a tail bound on semi-infinite ranges, the Gaussian-weighted spectral
integral against mu(du), and iterated integration in up to three
dimensions.

Integrands are called with a 1-D numpy array of nodes and must return an
array of the same length (or a scalar, which is broadcast). Pass
``vectorized=False`` for scalar-only callables.
"""

import math
import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss

from errors import DomainError, DimensionError, NonConvergenceError, TailViolation
from specfun import K_U_MAX, mu_density

logger = logging.getLogger(__name__)


# Gauss-Kronrod 15-point abscissae and weights (QUADPACK qk15)
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

XK = np.concatenate([-_XGK[:7], [0.0], _XGK[6::-1]])
WK = np.concatenate([_WGK[:7], [_WGK[7]], _WGK[6::-1]])
# Gauss-7 nodes sit at the odd positions of the Kronrod grid
GAUSS_INDEX = np.array([1, 3, 5, 7, 9, 11, 13])
WG = np.array([_WG[0], _WG[1], _WG[2], _WG[3], _WG[2], _WG[1], _WG[0]])

DEFAULT_MAX_PANELS = 4000
MAX_CUTOFF_GROWTH = 60


@dataclass(frozen=True)
class QuadResult:
    """Value of a numerical integral with its error estimate.

    ``cutoff`` records the truncation point of semi-infinite and spectral
    integrals (None for finite ranges).
    """

    value: float
    err_est: float
    evals: int
    converged: bool
    cutoff: Optional[float] = None


@dataclass(frozen=True)
class TailPolicy:
    """Declared decay of an integrand beyond the truncation point.

    kind 'gaussian' means |f(x)| <~ A exp(-rate x^2), 'exponential' means
    |f(x)| <~ A exp(-rate x); 'custom' fixes the cutoff and estimates the
    decay rate empirically.
    """

    kind: str
    rate: float = 0.0
    cutoff: Optional[float] = None

    @classmethod
    def gaussian(cls, t):
        if not t > 0:
            raise DomainError(f"gaussian tail needs t > 0, got {t}")
        return cls('gaussian', rate=float(t))

    @classmethod
    def exponential(cls, r):
        if not r > 0:
            raise DomainError(f"exponential tail needs r > 0, got {r}")
        return cls('exponential', rate=float(r))

    @classmethod
    def custom(cls, cutoff):
        return cls('custom', cutoff=float(cutoff))

    def initial_cutoff(self, a, tol):
        if self.kind == 'custom':
            if self.cutoff <= a:
                raise DomainError(f"custom cutoff {self.cutoff} must exceed a={a}")
            return self.cutoff
        log_inv = math.log(1.0 / min(tol, 0.5))
        if self.kind == 'gaussian':
            return max(a, 0.0) + math.sqrt(log_inv / self.rate)
        if self.kind == 'exponential':
            return a + log_inv / self.rate
        raise DomainError(f"unknown tail policy {self.kind!r}")

    def scan_step(self, cutoff):
        """Step over which the declared envelope falls by about e^2."""
        if self.kind == 'gaussian':
            return 1.0 / (self.rate * max(cutoff, 1.0))
        if self.kind == 'exponential':
            return 2.0 / self.rate
        return max(1.0, 0.1 * abs(cutoff))

    def decay_rate(self, cutoff):
        if self.kind == 'gaussian':
            return 2.0 * self.rate * max(cutoff, 1e-300)
        return self.rate


def _as_vectorized(f, vectorized):
    if vectorized:
        return f
    return lambda x: np.array([f(float(xi)) for xi in x])


def _evaluate(f, x):
    values = np.asarray(f(x), dtype=float)
    values = np.broadcast_to(values, x.shape)
    if not np.all(np.isfinite(values)):
        bad = x[~np.isfinite(values)][0]
        raise DomainError(f"integrand not finite at x={bad!r}")
    return values


def _gk_panels(f, lo, hi):
    """Kronrod and Gauss estimates for a batch of panels."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, None] + half[:, None] * XK[None, :]
    fx = _evaluate(f, x.ravel()).reshape(x.shape)
    kronrod = half * (fx @ WK)
    gauss = half * (fx[:, GAUSS_INDEX] @ WG)
    return kronrod, np.abs(kronrod - gauss)


def integrate_adaptive(f, a, b, tol=1e-10, rel_tol=0.0, max_panels=DEFAULT_MAX_PANELS,
                       vectorized=True, breakpoints=None):
    """Adaptive Gauss-Kronrod integration of f over [a, b].

    All pending panels are evaluated in one batch per pass. A panel is
    accepted when |K15 - G7| <= max(tol, rel_tol*|I|) * width/(b-a), else it
    is bisected.

    Args:
        f: integrand, vectorized unless ``vectorized=False``
        a, b: finite limits with a < b
        tol: absolute tolerance
        rel_tol: relative tolerance (0 disables)
        max_panels: budget of panel evaluations
        breakpoints: optional interior points used as initial panel edges

    Returns:
        QuadResult; converged=False when the budget ran out

    Raises:
        DomainError: bad limits or a non-finite integrand value
    """
    a = float(a)
    b = float(b)
    if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
        raise DomainError(f"integrate_adaptive needs finite a < b, got [{a}, {b}]")
    if not tol > 0 and not rel_tol > 0:
        raise DomainError("integrate_adaptive needs tol > 0 or rel_tol > 0")

    f = _as_vectorized(f, vectorized)
    edges = [a]
    for point in sorted(breakpoints or []):
        if a < point < b and point > edges[-1]:
            edges.append(float(point))
    edges.append(b)
    lo = np.array(edges[:-1])
    hi = np.array(edges[1:])

    span = b - a
    accepted_values = []
    accepted_errors = []
    evals = 0
    used = 0
    converged = True
    estimate = None

    while lo.size:
        kronrod, error = _gk_panels(f, lo, hi)
        evals += 15 * lo.size
        used += lo.size
        pending_sum = math.fsum(kronrod)
        if estimate is None:
            estimate = pending_sum
        else:
            estimate = math.fsum(accepted_values) + pending_sum
        allowed = max(tol, rel_tol * abs(estimate)) * (hi - lo) / span
        tiny = (hi - lo) <= 64.0 * np.finfo(float).eps * np.maximum(np.abs(lo), np.abs(hi)) + 1e-300
        done = (error <= allowed) | tiny
        if np.any(tiny & (error > allowed)):
            converged = False

        remaining = int(np.count_nonzero(~done))
        if used + 2 * remaining > max_panels:
            accepted_values.extend(kronrod)
            accepted_errors.extend(error)
            if remaining:
                converged = False
            break

        accepted_values.extend(kronrod[done])
        accepted_errors.extend(error[done])
        split_lo = lo[~done]
        split_hi = hi[~done]
        split_mid = 0.5 * (split_lo + split_hi)
        lo = np.concatenate([split_lo, split_mid])
        hi = np.concatenate([split_mid, split_hi])
        order = np.argsort(lo, kind='stable')
        lo = lo[order]
        hi = hi[order]

    value = math.fsum(accepted_values)
    err_est = math.fsum(accepted_errors)
    if not converged:
        logger.warning("integrate_adaptive: panel budget %d exhausted on [%g, %g], err_est=%.3g",
                       max_panels, a, b, err_est)
    return QuadResult(value=value, err_est=err_est, evals=evals, converged=converged)


def require_converged(result, what):
    """Return ``result`` or raise NonConvergenceError carrying it."""
    if not result.converged:
        raise NonConvergenceError(
            f"{what} did not converge (value={result.value:.17g}, err_est={result.err_est:.3g})",
            result=result)
    return result


def _max_abs(f, x):
    return float(np.max(np.abs(_evaluate(f, x))))


def integrate_semi_infinite(f, a, tol=1e-10, tail=None, rel_tol=0.0,
                            max_panels=DEFAULT_MAX_PANELS, vectorized=True, breakpoints=None):
    """Integral of f over [a, inf) as a truncated integral plus a tail bound.

    The cutoff grows geometrically until the envelope estimate of the tail
    is at most tol/2; the truncated part is then integrated to tol/2.

    Args:
        f: integrand
        a: finite lower limit
        tol: absolute tolerance
        tail: TailPolicy describing the decay of f

    Returns:
        QuadResult with ``cutoff`` set

    Raises:
        TailViolation: the envelope grows where the policy promises decay
        NonConvergenceError: no admissible cutoff found
    """
    if tail is None:
        raise DomainError("integrate_semi_infinite needs a TailPolicy")
    f = _as_vectorized(f, vectorized)
    a = float(a)
    cutoff = tail.initial_cutoff(a, tol)
    scan_evals = 0
    tail_err = None

    for _ in range(MAX_CUTOFF_GROWTH):
        step = tail.scan_step(cutoff)
        near = _max_abs(f, cutoff + step * np.linspace(0.0, 1.0, 5))
        far = _max_abs(f, cutoff + step * np.linspace(1.0, 2.0, 5))
        scan_evals += 10
        if tail.kind == 'custom':
            if near == 0.0:
                tail_err = 0.0
                break
            if far >= near:
                raise TailViolation(f"integrand does not decay beyond custom cutoff {cutoff:g}")
            rate = math.log(near / max(far, 1e-300)) / step
        else:
            rate = tail.decay_rate(cutoff)
        tail_err = near / rate
        if far > 1.35 * near and far / rate > 0.5 * tol:
            raise TailViolation(
                f"integrand grows beyond cutoff {cutoff:g} despite {tail.kind} tail policy")
        if tail_err <= 0.5 * tol or tail.kind == 'custom':
            break
        cutoff = a + 1.5 * (cutoff - a)
    else:
        raise NonConvergenceError(f"no admissible cutoff found for tail policy {tail.kind}")

    body = integrate_adaptive(f, a, cutoff, tol=0.5 * tol, rel_tol=rel_tol,
                              max_panels=max_panels, breakpoints=breakpoints)
    err_est = body.err_est + tail_err
    converged = body.converged and err_est <= max(tol, rel_tol * abs(body.value))
    if tail.kind == 'custom' and tail_err > 0.5 * tol:
        logger.warning("custom cutoff %g leaves estimated tail %.3g", cutoff, tail_err)
    return QuadResult(value=body.value, err_est=err_est, evals=body.evals + scan_evals,
                      converged=converged, cutoff=cutoff)


def integrate_interval(f, lo, hi, tol=1e-10, rel_tol=0.0, vectorized=True,
                       max_panels=DEFAULT_MAX_PANELS, split=0.0):
    """Integrate over (lo, hi) where either end may be a TailPolicy (infinite).

    A TailPolicy on the left describes the decay of f as x -> -inf.
    """
    f = _as_vectorized(f, vectorized)
    left_inf = isinstance(lo, TailPolicy)
    right_inf = isinstance(hi, TailPolicy)
    if not left_inf and not right_inf:
        return integrate_adaptive(f, lo, hi, tol=tol, rel_tol=rel_tol, max_panels=max_panels)
    if right_inf and not left_inf:
        return integrate_semi_infinite(f, lo, tol=tol, tail=hi, rel_tol=rel_tol,
                                       max_panels=max_panels)
    mirrored = lambda x: f(-x)
    if left_inf and not right_inf:
        res = integrate_semi_infinite(mirrored, -float(hi), tol=tol, tail=lo, rel_tol=rel_tol,
                                      max_panels=max_panels)
        return replace(res, cutoff=-res.cutoff)
    left = integrate_semi_infinite(mirrored, -split, tol=0.5 * tol, tail=lo, rel_tol=rel_tol,
                                   max_panels=max_panels)
    right = integrate_semi_infinite(f, split, tol=0.5 * tol, tail=hi, rel_tol=rel_tol,
                                    max_panels=max_panels)
    return QuadResult(value=left.value + right.value, err_est=left.err_est + right.err_est,
                      evals=left.evals + right.evals,
                      converged=left.converged and right.converged,
                      cutoff=max(left.cutoff, right.cutoff))


def spectral_cutoff(t, tol, bound=1.0, power=0.0, decay=0.0):
    """Cutoff U with t U^2 = ln(G/tol) + (p+2) ln(1+U) + (pi - kappa) U."""
    growth = max(math.pi - decay, 0.0)
    log_ratio = max(math.log(bound / tol), 1.0)
    u = 1.0
    for _ in range(100):
        nxt = math.sqrt((log_ratio + (power + 2.0) * math.log1p(u) + growth * u) / t)
        if abs(nxt - u) <= 1e-12 * nxt:
            return nxt
        u = nxt
    return u


def spectral_tail_bound(t, cutoff, bound=1.0, power=0.0, decay=0.0):
    """Bound on int_U^inf exp(-t u^2) G (1+u)^p mu(du), mu(du) <= (2/pi^2) u e^{pi u} du."""
    growth = max(math.pi - decay, 0.0)
    u = cutoff
    log_peak = (math.log(bound) + power * math.log1p(u) + math.log(2.0 / math.pi ** 2 * u)
                - t * u * u + growth * u)
    slope = 2.0 * t * u - growth - (power + 1.0) / u
    if slope <= 0.0:
        return math.inf
    return math.exp(log_peak) / slope


def integrate_spectral(g, t, tol=1e-10, bound=1.0, power=0.0, decay=0.0, u_max=K_U_MAX,
                       rel_tol=0.0, vectorized=True, max_panels=DEFAULT_MAX_PANELS):
    """int_0^inf exp(-t u^2) g(u) mu(du) with a certified spectral cutoff.

    The caller declares |g(u)| <= bound * (1+u)^power * exp(-decay*u); kernels
    built from two K_{iu} factors pass decay=pi.

    Args:
        g: function of the spectral variable u
        t: Gaussian damping, t > 0
        tol: absolute tolerance
        u_max: largest admissible cutoff (the K_{iu} box)

    Returns:
        QuadResult; converged=False (with a warning) when the cutoff needed
        exceeds u_max
    """
    if not t > 0:
        raise DomainError(f"integrate_spectral needs t > 0, got {t}")
    g = _as_vectorized(g, vectorized)
    cutoff = spectral_cutoff(t, tol, bound, power, decay)
    clipped = cutoff > u_max
    if clipped:
        cutoff = u_max
    tail = spectral_tail_bound(t, cutoff, bound, power, decay)

    def integrand(u):
        return np.exp(-t * u * u) * g(u) * mu_density(u)

    body = integrate_adaptive(integrand, 0.0, cutoff, tol=0.5 * tol, rel_tol=rel_tol,
                              max_panels=max_panels)
    err_est = body.err_est + tail
    converged = body.converged and err_est <= max(tol, rel_tol * abs(body.value))
    if clipped and not converged:
        logger.warning("integrate_spectral: cutoff clipped to %g at t=%g, tail bound %.3g",
                       u_max, t, tail)
    return QuadResult(value=body.value, err_est=err_est, evals=body.evals,
                      converged=converged, cutoff=cutoff)


def _effective_width(lo, hi, res):
    left_inf = isinstance(lo, TailPolicy)
    right_inf = isinstance(hi, TailPolicy)
    if not left_inf and not right_inf:
        return float(hi) - float(lo)
    if left_inf and right_inf:
        return 2.0 * abs(res.cutoff)
    finite = float(hi) if left_inf else float(lo)
    return abs(res.cutoff - finite)


def integrate_nested(f, domains, tol=1e-8, rel_tol=0.0):
    """Iterated integral of f(x_1, ..., x_d) for d <= 3.

    ``f`` is called as f(x_1, ..., x_{d-1}, xs) with scalars for the outer
    coordinates and an array for the innermost one. Each domain is a pair
    (lo, hi) whose ends are floats or TailPolicy objects (infinite ends).
    Level k integrates to tol / 3^k; the reported err_est adds the largest
    inner error times the effective width of each outer level.

    Raises:
        DimensionError: more than three dimensions
    """
    domains = list(domains)
    d = len(domains)
    if d == 0:
        raise DomainError("integrate_nested needs at least one domain")
    if d > 3:
        raise DimensionError(f"integrate_nested supports d <= 3, got d={d}")

    def level(k, fixed):
        lo, hi = domains[k]
        level_tol = tol / 3.0 ** k
        if k == d - 1:
            return integrate_interval(lambda x: f(*fixed, x), lo, hi, tol=level_tol,
                                      rel_tol=rel_tol)

        inner_stats = {'err': 0.0, 'evals': 0, 'converged': True}

        def inner(xs):
            out = np.empty(len(xs))
            for i, x in enumerate(xs):
                res = level(k + 1, fixed + (float(x),))
                out[i] = res.value
                inner_stats['err'] = max(inner_stats['err'], res.err_est)
                inner_stats['evals'] += res.evals
                inner_stats['converged'] = inner_stats['converged'] and res.converged
            return out

        res = integrate_interval(inner, lo, hi, tol=level_tol, rel_tol=rel_tol)
        err_est = res.err_est + inner_stats['err'] * _effective_width(lo, hi, res)
        return QuadResult(value=res.value, err_est=err_est,
                          evals=res.evals + inner_stats['evals'],
                          converged=res.converged and inner_stats['converged'],
                          cutoff=res.cutoff)

    result = level(0, ())
    logger.debug("integrate_nested d=%d: %d integrand evaluations", d, result.evals)
    return result


def gauss_legendre_panels(lo, hi, width, order=16):
    """Composite Gauss-Legendre nodes and weights on [lo, hi].

    Args:
        lo, hi: limits
        width: largest panel width
        order: nodes per panel

    Returns:
        (nodes, weights) as 1-D arrays
    """
    if not hi > lo:
        raise DomainError(f"gauss_legendre_panels needs lo < hi, got [{lo}, {hi}]")
    n_panels = max(1, int(math.ceil((hi - lo) / width)))
    edges = np.linspace(lo, hi, n_panels + 1)
    x, w = leggauss(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights
