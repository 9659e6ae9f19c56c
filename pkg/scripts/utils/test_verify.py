"""Identity catalog, report semantics and the psi evaluation routes."""

import math

import pytest

import verify
from errors import GridError, NonConvergenceError, RouteDomain, UnknownIdentity
from measures import Params
from quad import QuadResult
from verify import (
    CATALOG, CatalogEntry, IdentityReport, check_identity, compute_psi, default_args,
    entry_tolerance, failed_report, make_report, run_suite, summarize,
)


def test_catalog_ids_match_keys():
    assert len(CATALOG) >= 30
    for identity, entry in CATALOG.items():
        assert entry.id == identity
        assert entry.panel, identity


def test_make_report_equality():
    report = make_report('X', {'k': 1}, 1.0, 1.0 + 1e-9, 1e-7)
    assert report.passed
    assert report.abs_err == pytest.approx(1e-9, rel=1e-6)
    failing = make_report('X', {}, 1.0, 1.001, 1e-7)
    assert not failing.passed


def test_make_report_zero_rhs():
    assert make_report('X', {}, 0.0, 0.0, 0.0).rel_err == 0.0
    report = make_report('X', {}, 1e-12, 0.0, 1e-8)
    assert report.rel_err == math.inf
    assert report.passed


def test_make_report_inequalities():
    holds = make_report('X', {}, 0.9, 1.0, 0.0, kind='le')
    assert holds.passed and holds.abs_err == 0.0
    assert holds.diagnostics['kind'] == 'le'
    violated = make_report('X', {}, 1.1, 1.0, 0.0, kind='le')
    assert not violated.passed
    assert make_report('X', {}, 2.0, 1.0, 0.0, kind='ge').passed


def test_strict_inequality_fails_on_equality():
    assert make_report('X', {}, 1.0 - 1e-6, 1.0, 0.0, kind='lt').passed
    equal = make_report('X', {}, 1.0, 1.0, 1e-3, kind='lt')
    assert equal.abs_err == 0.0
    assert not equal.passed
    assert not make_report('X', {}, 1.0 + 1e-9, 1.0, 1e-3, kind='lt').passed


def test_make_report_rejects_non_finite():
    with pytest.raises(NonConvergenceError):
        make_report('X', {}, float('nan'), 1.0, 1e-7)


def test_failed_report_keeps_partial_value():
    partial = QuadResult(value=0.5, err_est=1e-3, evals=10, converged=False)
    report = failed_report('X', {'a': 1}, 1e-7, NonConvergenceError("budget", result=partial))
    assert not report.passed
    assert report.abs_err == math.inf
    assert report.diagnostics['partial_value'] == 0.5
    assert report.diagnostics['error'].startswith('NonConvergenceError')


def test_report_dict_uses_pass_key():
    report = make_report('X', {'a': 1.0}, 1.0, 1.0, 0.0)
    data = report.to_dict()
    assert data['pass'] is True
    assert IdentityReport.from_dict(data) == report


def test_p_symmetry_is_exact():
    report = check_identity('P_SYMMETRY')
    assert report.passed
    assert report.abs_err == 0.0
    assert report.args == {'t': 1.0, 'x': 0.3, 'y': -0.2}
    assert 'seconds' in report.diagnostics


def test_mellin_single_at_zero_order():
    report = check_identity('MELLIN_SINGLE', {'s': 1.0, 'u': 0.0})
    assert report.rhs == pytest.approx(math.pi / 2.0, rel=1e-14)
    assert report.passed


@pytest.mark.parametrize("identity", ['MU_FORMS', 'WILSON_BETA', 'K0_BOUNDS', 'FAVARD', 'Q_NORM',
                                      'CDH_ORTHO', 'C_LAPLACE', 'MACDONALD', 'THETA_CONSIST'])
def test_fast_identities_pass(identity):
    report = check_identity(identity)
    assert report.passed, report.to_dict()


@pytest.mark.slow
@pytest.mark.parametrize("identity", ['DUAL_D0', 'K_RELATION', 'C_PATHS', 'P_SUBPROB',
                                      'ENTRANCE_Q', 'H_HARMONIC', 'PSI_DUAL'])
def test_quadrature_identities_pass(identity):
    report = check_identity(identity)
    assert report.passed, report.to_dict()


def test_unknown_identity():
    with pytest.raises(UnknownIdentity):
        check_identity('NO_SUCH')
    reports = run_suite(['NO_SUCH'])
    assert len(reports) == 1
    assert not reports[0].passed
    assert 'UnknownIdentity' in reports[0].diagnostics['error']


def test_run_suite_single_entry():
    reports = run_suite(['P_SYMMETRY'])
    assert len(reports) == 1
    assert summarize(reports) == {'total': 1, 'passed': 1}


def test_profiles_select_panel_size():
    assert len(default_args('P_SYMMETRY', 'fast')) == 1
    assert len(default_args('P_SYMMETRY', 'thorough')) == len(CATALOG['P_SYMMETRY'].panel)


def test_tolerance_classes():
    assert entry_tolerance(CATALOG['DUAL_D0']) == 1e-5
    assert entry_tolerance(CATALOG['DUAL_D0'], {'nested': 1e-3}) == 1e-3
    assert entry_tolerance(CATALOG['MU_FORMS']) == 1e-12


def test_broken_kernel_is_caught(monkeypatch):
    monkeypatch.setattr(verify, 'heat_kernel_p', lambda t, x, y: 1.0 + x - y)
    report = check_identity('P_SYMMETRY')
    assert not report.passed


def test_raising_entry_becomes_failed_report(monkeypatch):
    def explode(args):
        raise NonConvergenceError("no luck", result=QuadResult(1.0, 0.1, 5, False))

    entry = CatalogEntry('EXPLODES', "always raises", explode, ({'x': 1.0},), tol=1e-6)
    monkeypatch.setitem(CATALOG, 'EXPLODES', entry)
    reports = run_suite(['EXPLODES', 'P_SYMMETRY'])
    assert [r.passed for r in reports] == [False, True]
    assert reports[0].diagnostics['partial_value'] == 1.0


def test_psi_argument_checks(unit_params):
    with pytest.raises(GridError):
        compute_psi([0.2, 0.4], [0.5, 1.0], unit_params)
    with pytest.raises(GridError):
        compute_psi([0.4], [0.5, 1.0], unit_params)
    with pytest.raises(RouteDomain):
        compute_psi([0.4], [0.5], unit_params, route='simulate')
    with pytest.raises(RouteDomain):
        compute_psi([0.6, 0.4, 0.2], [0.2, 0.5, 1.0], unit_params, route='cdh_quadrature')
    with pytest.raises(RouteDomain):
        compute_psi([0.4], [0.5], Params(a=-0.5, c=2.0), route='cdh_quadrature')


@pytest.mark.slow
def test_psi_routes_agree(unit_params):
    dual = compute_psi([0.4], [0.5], unit_params, route='cdh_quadrature')
    direct = compute_psi([0.4], [0.5], unit_params, route='y_quadrature')
    assert dual.value == pytest.approx(direct.value, rel=1e-3)


@pytest.mark.slow
def test_kpz_laplace_monte_carlo_two_times():
    report = verify.check_kpz_laplace_mc([0.6, 0.3], [0.5, 1.0], 1.5, 0.5, n_paths=50000, seed=13,
                                         config=verify.SamplerConfig(grid_points=512))
    assert report.args['s'] == [0.6, 0.3]
    assert report.passed, report.to_dict()


@pytest.mark.slow
def test_kpz_laplace_monte_carlo():
    report = verify.check_kpz_laplace_mc([0.4], [1.0], 1.0, 1.0, n_paths=2000, seed=11,
                                         config=verify.SamplerConfig(grid_points=512))
    assert report.id == 'KPZ_LAPLACE_MC'
    assert report.passed, report.to_dict()


def test_kernel_panels_cover_acceptance_points():
    subprob = CATALOG['P_SUBPROB'].panel
    assert len(subprob) == 6
    assert len({(args['t'], args['x']) for args in subprob}) == 6
    theta_points = {(args['t'], args['x'], args['y']) for args in CATALOG['P_VIA_THETA'].panel}
    assert {(1.0, 0.0, 0.0), (1.0, 0.5, -0.5)} <= theta_points
    assert len(default_args('P_SUBPROB', 'thorough')) == 6


@pytest.mark.slow
@pytest.mark.parametrize("args", CATALOG['P_SUBPROB'].panel)
def test_heat_kernel_mass_is_strictly_below_one(args):
    report = check_identity('P_SUBPROB', args)
    assert report.passed, report.to_dict()
    assert report.lhs < 1.0
    assert report.diagnostics['deficit'] > 0.0


@pytest.mark.slow
@pytest.mark.parametrize("args", CATALOG['P_VIA_THETA'].panel)
def test_heat_kernel_matches_theta_route(args):
    report = check_identity('P_VIA_THETA', args)
    assert report.passed, report.to_dict()
