#!/usr/bin/env python
"""
Command-line front end of the open KPZ numerics toolkit.

Subcommands:
  eval     evaluate one kernel, constant or Laplace transform (JSON on stdout)
  verify   run the identity suite (JSON or CSV report)
  sample   sample paths of Y, the dual Hahn process or the KPZ profile (CSV)
  bench    time a fixed panel of core evaluations

Usage:
  python cli.py [--config FILE] [--log-level LEVEL] [--log-file PATH] <command> ...

Exit codes: 0 success, 1 failed identities or unexpected error,
2 domain errors, 3 non-convergence. Errors are reported on stderr as
"ERROR: <Class>: <message>"; stdout carries data only.
"""

import sys
import json
import time
import logging
import argparse

import numpy as np

from errors import DomainError, UnknownIdentity, exit_code_for
from settings import load_config, load_run_config, resolve
from quad import require_converged
from specfun import bessel_k_imag_grid, log_gamma_prod_abs2
from kernels import cdh_transition_density, hartman_watson_theta_quad, heat_kernel_p_quad
from measures import (
    C_METHODS, Params, H_fun, entrance_law_p, laplace_C_closed, laplace_C_numeric,
    normalizing_C_quad, phi_density,
)
from processes import (
    SamplerConfig, path_weights, effective_sample_size, sample_H_bld, sample_H_kpz,
    sample_T_cdh, sample_Y,
)
from verify import CATALOG, PROFILES, PSI_ROUTES, compute_psi, run_suite, summarize
from exporters import finite_or_null, save_report, write_paths_csv, write_suite

logger = logging.getLogger(__name__)


LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'
EVAL_TARGETS = ('kernel-p', 'theta', 'q-density', 'C', 'K', 'laplace-C', 'phi', 'entrance',
                'psi', 'H')
SAMPLE_PROCESSES = ('y', 'cdh', 'kpz', 'kpz-bld')


def setup_logging(level='WARNING', log_file=None):
    """Log to stderr, and to ``log_file`` as well when it is set."""
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file, encoding='utf-8'))
    numeric = getattr(logging, str(level).upper(), None)
    if not isinstance(numeric, int):
        raise DomainError(f"unknown log level {level!r}")
    logging.basicConfig(level=numeric, format=LOG_FORMAT, handlers=handlers, force=True)


def _floats(text, name):
    if text is None:
        return None
    try:
        return [float(part) for part in str(text).split(',') if part.strip()]
    except ValueError:
        raise DomainError(f"--{name} expects comma-separated numbers, got {text!r}") from None


def _scalar(args, name):
    values = _floats(getattr(args, name), name)
    if not values:
        raise DomainError(f"{args.command} {getattr(args, 'target', '')} needs --{name}".strip())
    if len(values) != 1:
        raise DomainError(f"--{name} expects a single number here")
    return values[0]


def _emit(document):
    print(json.dumps(finite_or_null(document), allow_nan=False))


def _resolve_params(args, file_cfg, base_cfg):
    values = resolve('params', {'a': args.a, 'c': args.c, 'tau': args.tau}, file_cfg, base_cfg)
    return Params.from_mapping(values)


def _sampler_config(args, file_cfg, base_cfg):
    flags = {
        'seed': getattr(args, 'seed', None),
        'grid_points': getattr(args, 'grid_points', None),
        'range_policy': getattr(args, 'range_policy', None),
        'n_paths': getattr(args, 'n', None),
    }
    values = resolve('sampler', flags, file_cfg, base_cfg)
    return SamplerConfig.from_mapping(values), int(values['n_paths'])


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def cmd_eval(args, file_cfg, base_cfg):
    """Evaluate one target and print {target, value, err} as JSON."""
    kernel_cfg = resolve('kernels', None, file_cfg, base_cfg)
    t_min = float(kernel_cfg['t_min'])
    kernel_tol = float(kernel_cfg['kernel_tol'])
    params = _resolve_params(args, file_cfg, base_cfg)
    target = args.target
    extra = {}

    if target == 'kernel-p':
        res = heat_kernel_p_quad(_scalar(args, 't'), _scalar(args, 'x'), _scalar(args, 'y'),
                                 tol=kernel_tol, t_min=t_min)
        res = require_converged(res, "heat kernel")
        value, err = res.value, res.err_est
    elif target == 'theta':
        res = hartman_watson_theta_quad(_scalar(args, 'r'), _scalar(args, 't'),
                                        method=args.method or 'spectral', tol=kernel_tol,
                                        t_min=t_min)
        res = require_converged(res, "theta")
        value, err = res.value, res.err_est
    elif target == 'q-density':
        value = cdh_transition_density(_scalar(args, 's'), _scalar(args, 't'), _scalar(args, 'u'),
                                       _scalar(args, 'v'), params.c)
        err = 0.0
    elif target in ('C', 'K'):
        method = args.method or 'spectral'
        if method not in C_METHODS:
            raise DomainError(f"unknown method {method!r}; expected one of {', '.join(C_METHODS)}")
        res = require_converged(normalizing_C_quad(params, method=method), "C")
        value, err = res.value, res.err_est
        if target == 'K':
            total = params.a + params.c
            factor = total * (total + 2.0) / 2.0 ** (total + 1.0)
            value, err = factor * value, factor * err
        extra['method'] = method
    elif target == 'laplace-C':
        lam = _scalar(args, 'lam')
        method = args.method or 'closed'
        if method == 'closed':
            value, err = laplace_C_closed(params.a, params.c, lam), 0.0
        elif method == 'numeric':
            res = require_converged(laplace_C_numeric(params.a, params.c, lam), "Laplace of C")
            value, err = res.value, res.err_est
        else:
            raise DomainError("laplace-C method must be 'closed' or 'numeric'")
        extra['method'] = method
    elif target == 'phi':
        value, err = phi_density(_scalar(args, 's'), _scalar(args, 'u'), params), 0.0
    elif target == 'entrance':
        law = entrance_law_p(_scalar(args, 's'), params)
        value, err = law.laplace(), 0.0
        extra['atoms'] = [list(atom) for atom in law.atoms]
    elif target == 'psi':
        s = _floats(args.s, 's')
        t = _floats(args.t, 't')
        if not s or not t:
            raise DomainError("eval psi needs --s and --t")
        route = args.route or 'y_quadrature'
        config, n_paths = _sampler_config(args, file_cfg, base_cfg)
        res = compute_psi(s, t, params, route=route, n_paths=n_paths, config=config)
        value, err = res.value, res.err_est
        extra['route'] = route
    elif target == 'H':
        value, err = H_fun(_scalar(args, 't'), _scalar(args, 'x'), params), 0.0
    else:
        raise DomainError(f"unknown eval target {target!r}")

    document = {'target': target, 'value': float(value), 'err': float(err),
                'params': {'a': params.a, 'c': params.c, 'tau': params.tau}}
    document.update(extra)
    _emit(document)
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def _banner(title):
    print(f"\n{'='*80}", file=sys.stderr)
    print(title, file=sys.stderr)
    print(f"{'='*80}", file=sys.stderr)


def cmd_verify(args, file_cfg, base_cfg):
    """Run the identity suite; exit 0 iff every report passes."""
    if args.list:
        for entry in CATALOG.values():
            print(f"{entry.id}\t{entry.statement}")
        return 0

    suite_cfg = resolve('suite', {'profile': args.profile}, file_cfg, base_cfg)
    tolerances = resolve('tolerances', None, file_cfg, base_cfg)
    profile = suite_cfg['profile']
    if profile not in PROFILES:
        raise DomainError(f"unknown profile {profile!r}; expected one of {', '.join(PROFILES)}")

    if args.all:
        selection = 'all'
    else:
        selection = [part.strip() for part in ','.join(args.ids).split(',') if part.strip()]
        unknown = [identity for identity in selection if identity not in CATALOG]
        if unknown:
            raise UnknownIdentity(f"unknown identity id(s): {', '.join(unknown)}")

    _banner(f"IDENTITY SUITE ({profile})")
    reports = run_suite(selection, profile=profile, tolerances=tolerances,
                        fast_instances=int(suite_cfg['fast_instances']),
                        thorough_instances=int(suite_cfg['thorough_instances']))
    for report in reports:
        marker = "[OK]" if report.passed else "[X]"
        detail = report.diagnostics.get('error', f"rel_err={report.rel_err:.2e}")
        print(f"{marker} {report.id} {json.dumps(report.args)}: {detail}", file=sys.stderr)
    summary = summarize(reports)
    _banner(f"{summary['passed']} of {summary['total']} identities passed")

    if args.save:
        save_report(reports, profile=profile)
    write_suite(reports, args.output, fmt=args.format, profile=profile)
    if args.output:
        print(f"Report written to: {args.output}", file=sys.stderr)
    return 0 if summary['passed'] == summary['total'] else 1


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------

def cmd_sample(args, file_cfg, base_cfg):
    """Sample paths and write them as long-format CSV."""
    times = _floats(args.times, 'times')
    if not times:
        raise DomainError("sample needs --times")
    config, n_paths = _sampler_config(args, file_cfg, base_cfg)
    if n_paths < 1:
        raise DomainError("--n must be positive")

    params = _resolve_params(args, file_cfg, base_cfg)
    if args.process == 'y':
        paths = sample_Y(times, n_paths, config, params)
    elif args.process == 'cdh':
        paths = sample_T_cdh(times, n_paths, config, params, damping=args.damping)
    elif args.process == 'kpz':
        paths = sample_H_kpz(times, n_paths, config, params.a, params.c,
                             allow_unproven=args.allow_unproven)
    else:
        paths = sample_H_bld(times, n_paths, config, params.a, params.c)
        ess = effective_sample_size(path_weights(paths))
        print(f"[OK] importance sampler ESS: {ess:.1f} of {n_paths}", file=sys.stderr)

    rows = write_paths_csv(paths, args.output)
    if args.output:
        print(f"[OK] {len(paths)} paths ({rows} rows) written to {args.output}", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def _bench_steps(n_paths):
    u = np.linspace(0.0, 30.0, 100001)
    params = Params(a=1.5, c=0.7, tau=1.0)
    return [
        ("gamma products", lambda: log_gamma_prod_abs2(0.5 * (1.0 + 1j * u), 0.5 * (0.7 + 1j * u))),
        ("K_iu grid 200x200", lambda: bessel_k_imag_grid(np.linspace(0.0, 20.0, 200),
                                                          np.geomspace(1e-3, 50.0, 200))),
        ("heat kernel p_1(0, 0.3)", lambda: heat_kernel_p_quad(1.0, 0.0, 0.3)),
        ("spectral C(1.5, 0.7, 1)", lambda: normalizing_C_quad(params, method='spectral', tol=1e-13)),
        (f"Y sample ({n_paths} paths)",
         lambda: sample_Y([0.0, 0.5, 1.0], n_paths, SamplerConfig(grid_points=256),
                          Params(a=1.0, c=1.0, tau=1.0))),
    ]


def cmd_bench(args, file_cfg, base_cfg):
    """Time the benchmark panel; progress goes to stderr, the JSON table to stdout."""
    timings = {}
    _banner("BENCHMARK")
    for name, step in _bench_steps(args.n):
        started = time.perf_counter()
        step()
        elapsed = time.perf_counter() - started
        timings[name] = round(elapsed, 6)
        print(f"[OK] {name}: {elapsed:.3f}s", file=sys.stderr)
    print(json.dumps({'timings': timings, 'total': round(sum(timings.values()), 6)}, indent=2))
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_params(parser):
    parser.add_argument('--a', type=float, help='boundary parameter a (default from config)')
    parser.add_argument('--c', type=float, help='boundary parameter c (default from config)')
    parser.add_argument('--tau', type=float, help='time horizon tau (default from config)')


class OneLineArgumentParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors are a single machine-parsable stderr line."""

    def error(self, message):
        self.exit(2, f"ERROR: ArgumentError: {self.prog}: {message}\n")


def build_parser():
    parser = OneLineArgumentParser(
        description='Numerics for the stationary measure of open KPZ.',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  python cli.py eval C --a 1 --c 1 --tau 1 --method spectral
  python cli.py eval kernel-p --t 1 --x 0 --y 0
  python cli.py eval psi --route y_quadrature --s 0.4 --t 0.5 --a 1 --c 1 --tau 1
  python cli.py verify --all --profile fast --format json --output report.json
  python cli.py verify --ids P_SYMMETRY,DUAL_D0
  python cli.py sample kpz --a 1 --c 1 --times 0,0.25,0.5,0.75,1 --n 1000 --seed 42
  python cli.py --log-level INFO bench
        """
    )
    parser.add_argument('--config', help='run file (YAML or key=value lines) overriding config.yaml')
    parser.add_argument('--log-level', help='logging level (default from config: WARNING)')
    parser.add_argument('--log-file', help='also write the log to this file')
    sub = parser.add_subparsers(dest='command', required=True)

    p_eval = sub.add_parser('eval', help='evaluate one quantity')
    p_eval.add_argument('target', choices=EVAL_TARGETS)
    _add_params(p_eval)
    for name in ('t', 'x', 'y', 'r', 's', 'u', 'v', 'lam'):
        p_eval.add_argument(f'--{name}', help=f'argument {name} (comma list for psi --s/--t)')
    p_eval.add_argument('--method', help="C: spectral|direct2d|hartman_watson; theta: "
                                         "spectral|oscillatory; laplace-C: closed|numeric")
    p_eval.add_argument('--route', choices=PSI_ROUTES, help='psi evaluation route')
    p_eval.add_argument('--n', type=int, help='paths for the y_montecarlo route')
    p_eval.add_argument('--seed', type=int, help='seed for the y_montecarlo route')

    p_verify = sub.add_parser('verify', help='run the identity suite')
    group = p_verify.add_mutually_exclusive_group(required=True)
    group.add_argument('--all', action='store_true', help='run every catalog identity')
    group.add_argument('--ids', nargs='+', help='identity ids (space or comma separated)')
    group.add_argument('--list', action='store_true', help='list the catalog and exit')
    p_verify.add_argument('--profile', choices=PROFILES, help='fast (default) or thorough')
    p_verify.add_argument('--format', choices=('json', 'csv'), default='json')
    p_verify.add_argument('--output', help='report file (default: stdout)')
    p_verify.add_argument('--save', action='store_true',
                          help='also save a timestamped JSON report in the working directory')

    p_sample = sub.add_parser('sample', help='sample paths to CSV')
    p_sample.add_argument('process', choices=SAMPLE_PROCESSES)
    _add_params(p_sample)
    p_sample.add_argument('--times', required=True, help='comma-separated sample times')
    p_sample.add_argument('--n', type=int, help='number of paths (default from config)')
    p_sample.add_argument('--seed', type=int, help='random seed (default from config)')
    p_sample.add_argument('--output', help='CSV file (default: stdout)')
    p_sample.add_argument('--grid-points', type=int, help='inverse-CDF grid size')
    p_sample.add_argument('--range-policy', choices=('auto', 'fixed'))
    p_sample.add_argument('--damping', type=float, help='cdh: Gaussian damping of the initial law')
    p_sample.add_argument('--allow-unproven', action='store_true',
                          help='kpz: sample with min(a, c) <= -2')

    p_bench = sub.add_parser('bench', help='time core evaluations')
    p_bench.add_argument('--n', type=int, default=200, help='paths in the Y sampling step')
    return parser


HANDLERS = {
    'eval': cmd_eval,
    'verify': cmd_verify,
    'sample': cmd_sample,
    'bench': cmd_bench,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # usage errors and --help
        return exc.code
    try:
        base_cfg = load_config()
        file_cfg = load_run_config(args.config) if args.config else None
        log_cfg = resolve('logging', {'level': args.log_level, 'log_file': args.log_file},
                          file_cfg, base_cfg)
        setup_logging(log_cfg['level'], log_cfg['log_file'])
        return HANDLERS[args.command](args, file_cfg, base_cfg)
    except Exception as exc:
        logger.debug("command failed", exc_info=True)
        print(f"ERROR: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
