"""
Monte Carlo samplers.

    sample_Y      Markov process Y with joint density e^{c x_0 + a x_last} prod p / C
    sample_T_cdh  continuous dual Hahn process Z (T = Z^2)
    sample_H_kpz  open KPZ stationary profile H(t) = B_{t/2} - Y_{t/4} + Y_0
    sample_H_bld  the same law by self-normalized importance sampling of B_{t/2}

Every one-dimensional draw is an inverse-CDF lookup in a table tabulated on
a grid. Random numbers come from numpy generators keyed by
(seed, purpose, stream, step); a stream covers PATHS_PER_STREAM consecutive
paths, so a path's values do not depend on how many paths are drawn.
"""

import math
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.interpolate import PchipInterpolator

from errors import DegenerateWeights, DomainError, GridError, MethodDomain, NonConvergenceError, RangeError
from kernels import X_MAX, X_MIN, SpectralCache, cdh_transition_density, heat_kernel_p
from measures import Params, h_fun, harmonic_weight, normalizing_C, phi_density
from quad import TailPolicy, integrate_semi_infinite, require_converged

logger = logging.getLogger(__name__)


PATHS_PER_STREAM = 4096
MIN_GRID_POINTS = 64
COARSE_POINTS = 256
RANGE_STEP = 2.0
MIN_ESS_FRACTION = 0.01

PURPOSE_STATE = 0
PURPOSE_BROWNIAN = 1
PURPOSE_PROPOSAL = 2


@dataclass(frozen=True)
class SamplerConfig:
    """Grid and RNG settings shared by the samplers."""

    grid_points: int = 2048
    tail_mass_tol: float = 1e-8
    range_policy: str = 'auto'
    range_lo: float = -12.0
    range_hi: float = 4.0
    seed: int = 20240601
    bld_steps: int = 512
    kernel_tol: float = 1e-12

    def __post_init__(self):
        if int(self.grid_points) != self.grid_points or self.grid_points < MIN_GRID_POINTS:
            raise DomainError(f"grid_points must be an integer >= {MIN_GRID_POINTS}")
        if self.range_policy not in ('auto', 'fixed'):
            raise DomainError(f"range_policy must be 'auto' or 'fixed', got {self.range_policy!r}")
        if not self.range_lo < self.range_hi:
            raise DomainError("range_lo must be below range_hi")
        if self.bld_steps < 2 or self.bld_steps % 2:
            raise DomainError("bld_steps must be an even integer >= 2")
        if not 0 < self.tail_mass_tol < 1:
            raise DomainError("tail_mass_tol must lie in (0, 1)")

    @classmethod
    def from_mapping(cls, values):
        """Build from a resolved 'sampler' config section; unknown keys are ignored."""
        known = {name: values[name] for name in cls.__dataclass_fields__ if name in values}
        for name in ('grid_points', 'seed', 'bld_steps'):
            if name in known:
                known[name] = int(known[name])
        for name in ('tail_mass_tol', 'range_lo', 'range_hi', 'kernel_tol'):
            if name in known:
                known[name] = float(known[name])
        return cls(**known)


@dataclass(frozen=True)
class PathSample:
    """One sampled trajectory at the requested times."""

    times: Tuple[float, ...]
    values: Tuple[float, ...]
    weight: float = 1.0
    seed: int = 0
    stream: int = 0


@dataclass(frozen=True)
class CdhStart:
    """Initial law phi_{s0}(u) e^{-damping u^2} du / normalizer of the CDH sampler."""

    s0: float
    damping: float
    normalizer: float


# ---------------------------------------------------------------------------
# Random numbers
# ---------------------------------------------------------------------------

def _stream_rng(seed, purpose, stream, step):
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=(purpose, stream, step))
    return np.random.default_rng(sequence)


def _draw_block(seed, purpose, step, n_paths, width, kind='uniform'):
    """(n_paths, width) draws; rows of stream k are paths k*PATHS_PER_STREAM onward."""
    out = np.empty((n_paths, width))
    for start in range(0, n_paths, PATHS_PER_STREAM):
        stop = min(start + PATHS_PER_STREAM, n_paths)
        rng = _stream_rng(seed, purpose, start // PATHS_PER_STREAM, step)
        if kind == 'normal':
            out[start:stop] = rng.standard_normal((stop - start, width))
        else:
            out[start:stop] = rng.random((stop - start, width))
    return out


def _to_paths(times, values, seed, weights=None):
    times = tuple(float(t) for t in times)
    paths = []
    for i, row in enumerate(values):
        paths.append(PathSample(times=times, values=tuple(float(v) for v in row),
                                weight=1.0 if weights is None else float(weights[i]),
                                seed=int(seed), stream=i // PATHS_PER_STREAM))
    return paths


# ---------------------------------------------------------------------------
# Inverse-CDF tables
# ---------------------------------------------------------------------------

class InverseCdfTable:
    """Rows of densities on a common grid, sampled by monotone cubic inversion.

    Each row's CDF comes from the trapezoid rule; the inverse is a PCHIP
    interpolant of grid position against CDF, built the first time a row is
    used.
    """

    def __init__(self, grid, densities, what='density'):
        densities = np.atleast_2d(np.asarray(densities, dtype=float))
        peak = np.max(np.abs(densities), axis=1, keepdims=True)
        if np.any(densities < -1e-8 * peak):
            logger.warning("%s: negative values down to %.3g relative clipped", what,
                           float(np.min(densities / np.maximum(peak, 1e-300))))
        densities = np.clip(densities, 0.0, None)
        cdf = cumulative_trapezoid(densities, grid, axis=1, initial=0.0)
        totals = cdf[:, -1]
        if np.any(~(totals > 0)):
            raise NonConvergenceError(f"{what}: a tabulated row has no mass on the grid")
        self.grid = np.asarray(grid, dtype=float)
        self.cdf = cdf / totals[:, None]
        self.totals = totals
        self.what = what
        self._inverse = {}

    def _row_inverse(self, row):
        inverse = self._inverse.get(row)
        if inverse is None:
            cdf = self.cdf[row]
            rises = np.diff(cdf) > 0
            # plateau ends next to a rise, then strictly increasing points only
            keep = np.concatenate(([False], rises)) | np.concatenate((rises, [False]))
            cdf, grid = cdf[keep], self.grid[keep]
            strict = np.concatenate(([True], np.diff(cdf) > 0))
            cdf, grid = cdf[strict], grid[strict]
            if cdf.size < 2 or not np.all(np.diff(cdf) > 0):
                raise NonConvergenceError(f"{self.what}: CDF row {row} is not strictly increasing")
            cdf[-1] = 1.0
            inverse = (float(cdf[0]), PchipInterpolator(cdf, grid, extrapolate=False))
            self._inverse[row] = inverse
        return inverse

    def sample(self, rows, uniforms):
        rows = np.asarray(rows, dtype=int)
        uniforms = np.asarray(uniforms, dtype=float)
        out = np.empty(uniforms.shape)
        for row in np.unique(rows):
            mask = rows == row
            cdf_lo, inverse = self._row_inverse(int(row))
            out[mask] = inverse(np.clip(uniforms[mask], cdf_lo, 1.0))
        return np.clip(out, self.grid[0], self.grid[-1])


def _neighbour_rows(grid, x, uniforms):
    """Pick row i or i+1 with linear-interpolation probabilities for states between grid nodes."""
    idx = np.clip(np.searchsorted(grid, x) - 1, 0, grid.size - 2)
    lam = np.clip((x - grid[idx]) / (grid[idx + 1] - grid[idx]), 0.0, 1.0)
    return idx + (uniforms < lam).astype(int)


def _tail_masses(grid, rows):
    """Estimated mass beyond each end, relative to the row totals, by exponential extrapolation."""
    h = grid[1] - grid[0]
    totals = trapezoid(rows, grid, axis=1)

    def one_side(f0, f1):
        with np.errstate(divide='ignore', invalid='ignore'):
            slope = np.log(f1 / f0) / h
        mass = np.where(f0 <= 0, 0.0, np.where(slope > 0, f0 / np.where(slope > 0, slope, 1.0), np.inf))
        return float(np.max(mass / totals))

    return one_side(rows[:, 0], rows[:, 1]), one_side(rows[:, -1], rows[:, -2])


def _choose_range(marginals, lo, hi, box, tol, what):
    """Expand [lo, hi] inside ``box`` until both tails carry mass below tol, then trim."""
    box_lo, box_hi = box
    lo, hi = max(lo, box_lo), min(hi, box_hi)
    while True:
        grid = np.linspace(lo, hi, COARSE_POINTS)
        rows = np.clip(marginals(grid), 0.0, None)
        left, right = _tail_masses(grid, rows)
        grow_lo = left > tol and lo > box_lo
        grow_hi = right > tol and hi < box_hi
        if not (grow_lo or grow_hi):
            break
        if grow_lo:
            lo = max(lo - RANGE_STEP, box_lo)
        if grow_hi:
            hi = min(hi + RANGE_STEP, box_hi)
        logger.debug("%s: range expanded to [%.3f, %.3f]", what, lo, hi)
    if left > tol or right > tol:
        raise RangeError(f"{what}: tail mass {max(left, right):.2e} exceeds {tol:g} "
                         f"inside the supported range [{box_lo:.3g}, {box_hi:.3g}]")
    cdf = cumulative_trapezoid(rows, grid, axis=1, initial=0.0)
    cdf = cdf / cdf[:, -1:]
    cut = 0.1 * tol
    first = int(np.min(np.argmax(cdf > cut, axis=1)))
    last = int(np.max(np.argmax(cdf >= 1.0 - cut, axis=1)))
    lo_new = grid[max(first - 1, 0)]
    hi_new = grid[min(last + 1, grid.size - 1)]
    logger.debug("%s: range [%.3f, %.3f]", what, lo_new, hi_new)
    return lo_new, hi_new


# ---------------------------------------------------------------------------
# Process Y
# ---------------------------------------------------------------------------

def _check_y_grid(times, tau):
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1:
        raise GridError("times must be a non-empty 1-D sequence")
    if np.any(np.diff(times) <= 0):
        raise GridError("times must be strictly increasing")
    if times[0] != 0.0:
        raise GridError("times must start at 0")
    if times[-1] > tau:
        raise GridError(f"times must lie in [0, tau={tau:g}]")
    return times


def y_joint_density(times, xs, params, C=None):
    """Finite-dimensional density of Y:

        f_t(x) = e^{c x_0 + a x_last} prod_k p_{t_k - t_{k-1}}(x_{k-1}, x_k) / C

    Raises:
        GridError: mismatched lengths, unsorted times or missing 0 / tau
    """
    times = np.asarray(times, dtype=float)
    xs = np.asarray(xs, dtype=float)
    if times.size != xs.size or times.size < 2:
        raise GridError("times and xs need equal length >= 2")
    _check_y_grid(times, params.tau)
    if times[-1] != params.tau:
        raise GridError("times must end at tau")
    if C is None:
        C = normalizing_C(params)
    value = math.exp(params.c * xs[0] + params.a * xs[-1]) / C
    for k in range(1, times.size):
        value *= heat_kernel_p(times[k] - times[k - 1], xs[k - 1], xs[k])
    return value


def y_marginal_density(t, x, params, C=None):
    """One-time marginal of Y at t:

        [int e^{c x0} p_t(x0, x) dx0] [int p_{tau-t}(x, y) e^{a y} dy] / C

    Both brackets are evaluated spectrally, which needs a, c > 0 (or the
    bracket to be trivial at t = 0 or t = tau).
    """
    if not 0.0 <= t <= params.tau:
        raise DomainError(f"need 0 <= t <= tau, got {t:g}")
    if C is None:
        C = normalizing_C(params)
    try:
        left = harmonic_weight(0.0, x, params.c, t) if t > 0 else math.exp(params.c * x)
        right = harmonic_weight(t, x, params.a, params.tau)
    except DomainError as exc:
        raise MethodDomain(f"spectral marginal needs positive exponents: {exc}") from exc
    return left * right / C


class _DoobBridge:
    """Process Q on [0, tau] with Q_0 ~ e^{start x} H_0(x) and transitions H_t p / H_s.

    H_t is the spectral harmonic function of e^{end x}; end must be positive.
    The finite-dimensional law is e^{start x_0} prod p e^{end x_last} / C.
    """

    def __init__(self, start, end, tau, times, config):
        if not end > 0:
            raise DomainError("Doob transform needs a positive terminal exponent")
        self.start = start
        self.end = end
        self.tau = tau
        self.times = np.asarray(times, dtype=float)
        self.config = config
        dampings = list(np.diff(self.times)) + [tau - t for t in self.times if t < tau]
        self.t_min = float(min(dampings)) if dampings else tau
        self.grid = self._build_grid()
        self.cache = SpectralCache.build(self.grid, t_min=self.t_min, tol=config.kernel_tol)
        self.harmonic = {t: self._harmonic(self.cache, t) for t in self.times}

    @staticmethod
    def _trapezoid_weights(grid):
        w = np.full(grid.size, grid[1] - grid[0])
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def _harmonic(self, cache, t):
        if t >= self.tau:
            return np.exp(self.end * cache.x_grid)
        damp = np.exp(-(self.tau - t) * cache.u_grid ** 2)
        return cache.inverse(damp * h_fun(0.0, cache.u_grid, self.end))

    def _marginals(self, cache):
        weights = self._trapezoid_weights(cache.x_grid)
        start = np.exp(self.start * cache.x_grid)
        rows = []
        for t in self.times:
            left = start if t == 0 else (weights * start) @ cache.kernel(t)
            rows.append(left * self._harmonic(cache, t))
        return np.array(rows)

    def _build_grid(self):
        cfg = self.config
        if cfg.range_policy == 'fixed':
            lo, hi = cfg.range_lo, cfg.range_hi
        else:
            def marginals(grid):
                cache = SpectralCache.build(grid, t_min=self.t_min, tol=cfg.kernel_tol)
                return self._marginals(cache)

            lo, hi = _choose_range(marginals, cfg.range_lo, cfg.range_hi, (X_MIN, X_MAX),
                                   cfg.tail_mass_tol, "Y sampler")
        return np.linspace(lo, hi, int(cfg.grid_points))

    def sample(self, n_paths, seed):
        """Values of Q at self.times for n_paths paths, shape (n_paths, len(times))."""
        if self.times[0] != 0.0:
            raise GridError("Doob bridge times must start at 0")
        n_steps = self.times.size
        out = np.empty((n_paths, n_steps))
        initial = np.exp(self.start * self.grid) * self.harmonic[self.times[0]]
        table = InverseCdfTable(self.grid, initial, what="initial law")
        draws = _draw_block(seed, PURPOSE_STATE, 0, n_paths, 1)
        out[:, 0] = table.sample(np.zeros(n_paths, dtype=int), draws[:, 0])
        for k in range(1, n_steps):
            s, t = self.times[k - 1], self.times[k]
            rows = self.cache.kernel(t - s) * self.harmonic[t][None, :]
            table = InverseCdfTable(self.grid, rows, what=f"transition {s:g}->{t:g}")
            draws = _draw_block(seed, PURPOSE_STATE, k, n_paths, 2)
            chosen = _neighbour_rows(self.grid, out[:, k - 1], draws[:, 0])
            out[:, k] = table.sample(chosen, draws[:, 1])
        return out


def _sample_y_values(times, n_paths, config, params):
    """Y values at ``times`` (which start at 0), shape (n_paths, len(times))."""
    times = _check_y_grid(times, params.tau)
    tau = params.tau
    if params.c > 0:
        # build X with H from e^{cx} and reverse: Y_t = X_{tau - t}
        x_times = np.unique(np.concatenate(([0.0], tau - times)))
        bridge = _DoobBridge(params.a, params.c, tau, x_times, config)
        x_values = bridge.sample(n_paths, config.seed)
        index = {float(t): i for i, t in enumerate(x_times)}
        cols = [index[float(tau - t)] for t in times]
        return x_values[:, cols]
    bridge = _DoobBridge(params.c, params.a, tau, times, config)
    return bridge.sample(n_paths, config.seed)


def sample_Y(times, n_paths, config, params):
    """Sample paths of Y at the requested times (0 included, tau optional).

    For c > 0 the process X with initial law e^{ax} H_0 / C and transitions
    H_t p / H_s is sampled and reversed in time; otherwise a > 0 and the same
    construction is applied to Y directly with the roles of a and c swapped.
    """
    if n_paths < 1:
        raise DomainError("n_paths must be positive")
    values = _sample_y_values(times, n_paths, config, params)
    logger.info("sampled %d Y paths at %d times", n_paths, len(times))
    return _to_paths(times, values, config.seed)


# ---------------------------------------------------------------------------
# Continuous dual Hahn process
# ---------------------------------------------------------------------------

def cdh_start(s0, params, damping=None, C=None, tol=1e-12):
    """Normalizing constant of phi_{s0}(u) e^{-damping u^2} (damping defaults to tau)."""
    damping = params.tau if damping is None else float(damping)
    if not damping > 0:
        raise DomainError("initial damping must be positive")
    if C is None:
        C = normalizing_C(params)
    res = integrate_semi_infinite(lambda u: phi_density(s0, u, params, C=C) * np.exp(-damping * u * u),
                                  0.0, tol=tol, tail=TailPolicy.gaussian(damping), rel_tol=1e-12)
    normalizer = require_converged(res, "CDH initial law").value
    return CdhStart(s0=float(s0), damping=damping, normalizer=normalizer)


def _cdh_grid(s_times, params, config, damping, C):
    s0 = s_times[0]
    cfg = config
    v_floor = 1e-6

    def marginals(grid):
        initial = phi_density(s0, grid, params, C=C) * np.exp(-damping * grid * grid)
        return initial[None, :]

    if cfg.range_policy == 'fixed':
        hi = max(cfg.range_hi, 1.0)
    else:
        _, hi = _choose_range(marginals, v_floor, max(cfg.range_hi, 1.0), (v_floor, 60.0),
                              cfg.tail_mass_tol, "CDH sampler")
    # transitions spread by O(1) with exponential tails of rate pi/2
    hi += 2.0 * math.log(1.0 / cfg.tail_mass_tol) / math.pi
    return np.linspace(v_floor, hi, int(cfg.grid_points))


def sample_T_cdh(s_times, n_paths, config, params, damping=None, start=None):
    """Sample the continuous dual Hahn process Z at s_times (values are U = Z; T = U^2).

    The initial law at s_times[0] is phi_{s0}(u) e^{-damping u^2}, normalized;
    see cdh_start for the constant.

    Raises:
        RangeError: a time outside (-a, c)
    """
    s_times = np.asarray(s_times, dtype=float)
    if s_times.size < 1 or np.any(np.diff(s_times) <= 0):
        raise GridError("s_times must be strictly increasing")
    if not (-params.a < s_times[0] and s_times[-1] < params.c):
        raise RangeError(f"s_times must lie inside (-a, c) = ({-params.a:g}, {params.c:g})")
    if n_paths < 1:
        raise DomainError("n_paths must be positive")
    C = normalizing_C(params)
    if start is None:
        start = cdh_start(s_times[0], params, damping=damping, C=C)
    logger.info("CDH initial law at s0=%g: damping %g, normalizer %.10g",
                start.s0, start.damping, start.normalizer)
    grid = _cdh_grid(s_times, params, config, start.damping, C)

    out = np.empty((n_paths, s_times.size))
    initial = phi_density(s_times[0], grid, params, C=C) * np.exp(-start.damping * grid * grid)
    table = InverseCdfTable(grid, initial, what="CDH initial law")
    draws = _draw_block(config.seed, PURPOSE_STATE, 0, n_paths, 1)
    out[:, 0] = table.sample(np.zeros(n_paths, dtype=int), draws[:, 0])
    for k in range(1, s_times.size):
        s, t = s_times[k - 1], s_times[k]
        rows = np.array([cdh_transition_density(s, t, u, grid, params.c) for u in grid])
        table = InverseCdfTable(grid, rows, what=f"CDH transition {s:g}->{t:g}")
        draws = _draw_block(config.seed, PURPOSE_STATE, k, n_paths, 2)
        chosen = _neighbour_rows(grid, out[:, k - 1], draws[:, 0])
        out[:, k] = table.sample(chosen, draws[:, 1])
    return _to_paths(s_times, out, config.seed)


# ---------------------------------------------------------------------------
# Open KPZ stationary measure
# ---------------------------------------------------------------------------

KPZ_TAU = 0.25


def check_kpz_range(a, c, allow_unproven=False):
    """Raise RangeError unless a + c > 0 and min(a, c) > -2 (or the override is set)."""
    if not a + c > 0:
        raise RangeError(f"need a + c > 0, got a={a:g}, c={c:g}")
    if min(a, c) <= -2.0:
        if not allow_unproven:
            raise RangeError(f"min(a, c) = {min(a, c):g} <= -2 is outside the proven range; "
                             "pass allow_unproven to sample anyway")
        logger.warning("sampling H with min(a, c) = %g: representation unproven here", min(a, c))


def _check_unit_times(times):
    times = np.asarray(times, dtype=float)
    if times.size < 1 or np.any(np.diff(times) <= 0):
        raise GridError("times must be strictly increasing")
    if times[0] != 0.0 or times[-1] > 1.0:
        raise GridError("times must start at 0 and lie in [0, 1]")
    return times


def _brownian_half(seed, times, n_paths):
    """B_{t/2} at the given times (B_0 = 0): independent N(0, dt/2) increments."""
    gaps = np.diff(times)
    normals = _draw_block(seed, PURPOSE_BROWNIAN, 0, n_paths, gaps.size)
    increments = normals * np.sqrt(0.5 * gaps)[None, :]
    return np.concatenate((np.zeros((n_paths, 1)), np.cumsum(increments, axis=1)), axis=1)


def sample_H_kpz(times, n_paths, config, a, c, allow_unproven=False, freeze_y=False):
    """Sample H(t) = B_{t/2} - Y_{t/4} + Y_0 with Y built for tau = 1/4.

    Args:
        allow_unproven: sample outside min(a, c) > -2
        freeze_y: drop the Y component (Brownian part only, for diagnostics)
    """
    times = _check_unit_times(times)
    check_kpz_range(a, c, allow_unproven=allow_unproven)
    if n_paths < 1:
        raise DomainError("n_paths must be positive")
    brownian = _brownian_half(config.seed, times, n_paths)
    if freeze_y:
        values = brownian
    else:
        params = Params(a=a, c=c, tau=KPZ_TAU)
        y = _sample_y_values(KPZ_TAU * times, n_paths, config, params)
        values = brownian - y + y[:, :1]
    values[:, 0] = 0.0
    return _to_paths(times, values, config.seed)


def _bld_grid(times, steps):
    return np.unique(np.concatenate((np.linspace(0.0, 1.0, steps + 1), times)))


def _bld_log_weights(beta, grid, a, c):
    integral = trapezoid(np.exp(-2.0 * beta), grid, axis=1)
    return -a * beta[:, -1] - 0.5 * (a + c) * np.log(integral)


def _bld_proposals(seed, grid, start, stop):
    """Proposal paths beta = B_{t/2} on the fine grid for paths [start, stop)."""
    gaps = np.diff(grid)
    stream = start // PATHS_PER_STREAM
    normals = _stream_rng(seed, PURPOSE_PROPOSAL, stream, 0).standard_normal((stop - start, gaps.size))
    increments = normals * np.sqrt(0.5 * gaps)[None, :]
    return np.concatenate((np.zeros((stop - start, 1)), np.cumsum(increments, axis=1)), axis=1)


def effective_sample_size(weights):
    weights = np.asarray(weights, dtype=float)
    return float(weights.sum() ** 2 / np.sum(weights ** 2))


def sample_H_bld(times, n_paths, config, a, c):
    """Weighted samples of H = B'_{t/2} + X with X reweighted from beta = B_{t/2} by

        e^{-a beta_1} (int_0^1 e^{-2 beta_t} dt)^{-(a+c)/2}

    The time integral is a trapezoid sum on config.bld_steps uniform steps
    (plus the requested times). Weights are scaled by their maximum.

    Raises:
        RangeError: a <= 0 or c <= 0
        DegenerateWeights: effective sample size below 1% of n_paths
    """
    times = _check_unit_times(times)
    if not (a > 0 and c > 0):
        raise RangeError(f"importance sampler needs a > 0 and c > 0, got a={a:g}, c={c:g}")
    if n_paths < 1:
        raise DomainError("n_paths must be positive")
    grid = _bld_grid(times, config.bld_steps)
    cols = np.searchsorted(grid, times)
    log_w = np.empty(n_paths)
    x_values = np.empty((n_paths, times.size))
    for start in range(0, n_paths, PATHS_PER_STREAM):
        stop = min(start + PATHS_PER_STREAM, n_paths)
        beta = _bld_proposals(config.seed, grid, start, stop)
        log_w[start:stop] = _bld_log_weights(beta, grid, a, c)
        x_values[start:stop] = beta[:, cols]
    weights = np.exp(log_w - log_w.max())
    ess = effective_sample_size(weights)
    logger.info("importance sampler: ESS %.1f of %d paths", ess, n_paths)
    if ess < MIN_ESS_FRACTION * n_paths:
        raise DegenerateWeights(f"effective sample size {ess:.1f} below "
                                f"{MIN_ESS_FRACTION:.0%} of {n_paths} paths")
    values = _brownian_half(config.seed, times, n_paths) + x_values
    values[:, 0] = 0.0
    return _to_paths(times, values, config.seed, weights=weights)


def richardson_check(n_paths, config, a, c):
    """Compare the log-weight functional on bld_steps and bld_steps/2 uniform steps.

    Returns:
        dict with the largest and mean absolute log-weight change and both ESS values
    """
    fine = np.linspace(0.0, 1.0, config.bld_steps + 1)
    diffs = []
    w_fine, w_coarse = [], []
    for start in range(0, n_paths, PATHS_PER_STREAM):
        stop = min(start + PATHS_PER_STREAM, n_paths)
        beta = _bld_proposals(config.seed, fine, start, stop)
        lw_fine = _bld_log_weights(beta, fine, a, c)
        lw_coarse = _bld_log_weights(beta[:, ::2], fine[::2], a, c)
        diffs.append(np.abs(lw_fine - lw_coarse))
        w_fine.append(lw_fine)
        w_coarse.append(lw_coarse)
    diffs = np.concatenate(diffs)
    lw_fine = np.concatenate(w_fine)
    lw_coarse = np.concatenate(w_coarse)
    return {
        'steps': config.bld_steps,
        'max_log_weight_change': float(diffs.max()),
        'mean_log_weight_change': float(diffs.mean()),
        'ess_fine': effective_sample_size(np.exp(lw_fine - lw_fine.max())),
        'ess_coarse': effective_sample_size(np.exp(lw_coarse - lw_coarse.max())),
    }


# ---------------------------------------------------------------------------
# Estimators
# ---------------------------------------------------------------------------

def path_matrix(paths):
    """Stack path values into an (n_paths, n_times) array."""
    if not paths:
        return np.empty((0, 0))
    return np.array([p.values for p in paths], dtype=float)


def path_weights(paths):
    return np.array([p.weight for p in paths], dtype=float)


def laplace_estimate(values, weights=None):
    """Mean and standard error of ``values``.

    With weights the self-normalized estimator is used and the standard
    error comes from the delta method.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if n < 2:
        raise DomainError("need at least two samples")
    if weights is None:
        return float(values.mean()), float(values.std(ddof=1) / math.sqrt(n))
    weights = np.asarray(weights, dtype=float)
    total = weights.sum()
    mean = float(np.sum(weights * values) / total)
    stderr = float(math.sqrt(np.sum(weights ** 2 * (values - mean) ** 2)) / total)
    return mean, stderr
