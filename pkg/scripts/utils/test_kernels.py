"""Heat kernel, Hartman-Watson density, dual kernels and the spectral cache."""

import math

import mpmath
import numpy as np
import pytest

from errors import DomainError, OrderError
from kernels import (
    SpectralCache, cdh_transition_density, cdh_transition_density_T, cdh_transition_measure,
    check_cache_kernel, hartman_watson_theta, hartman_watson_theta_array, heat_kernel_p,
    heat_kernel_via_theta, macdonald_rhs, mellin_k, q_tilde_kernel,
)
from specfun import bessel_k_imag


def _abs2_gamma(z):
    return abs(mpmath.gamma(z)) ** 2


def test_heat_kernel_is_exactly_symmetric():
    assert heat_kernel_p(1.0, 0.3, -0.2) == heat_kernel_p(1.0, -0.2, 0.3)


def test_heat_kernel_positive():
    assert heat_kernel_p(0.5, -1.0, 0.5) > 0.0


@pytest.mark.slow
def test_heat_kernel_against_mpmath():
    def integrand(u):
        k = mpmath.re(mpmath.besselk(1j * u, 1))
        return mpmath.exp(-u * u) * k * k * 2 / mpmath.pi ** 2 * u * mpmath.sinh(mpmath.pi * u)

    expected = float(mpmath.quad(integrand, [0, 1, 2, 4, 8]))
    assert heat_kernel_p(1.0, 0.0, 0.0) == pytest.approx(expected, rel=1e-8)


def test_heat_kernel_matches_theta_route():
    assert heat_kernel_via_theta(0.5, 0.1, -0.3) == pytest.approx(heat_kernel_p(0.5, 0.1, -0.3),
                                                                 rel=1e-6)


@pytest.mark.parametrize("t, x, y", [(1e-4, 0.0, 0.0), (1.0, -20.0, 0.0), (1.0, 0.0, 7.0)])
def test_heat_kernel_domain(t, x, y):
    with pytest.raises(DomainError):
        heat_kernel_p(t, x, y)


def test_theta_routes_agree():
    spectral = hartman_watson_theta(1.0, 1.0)
    oscillatory = hartman_watson_theta(1.0, 1.0, method='oscillatory')
    assert spectral == pytest.approx(oscillatory, rel=1e-6)


def test_theta_array_matches_scalar():
    times = [0.5, 1.0, 2.0]
    values = hartman_watson_theta_array(1.0, times)
    for t, value in zip(times, values):
        assert value == pytest.approx(hartman_watson_theta(1.0, t), rel=1e-7, abs=1e-12)


@pytest.mark.parametrize("kwargs", [{'method': 'series'}, {'method': 'oscillatory', 't': 20.0},
                                    {'r': -1.0}])
def test_theta_domain(kwargs):
    call = {'r': 1.0, 't': 1.0, 'method': 'spectral'}
    call.update(kwargs)
    with pytest.raises(DomainError):
        hartman_watson_theta(call['r'], call['t'], method=call['method'])


def test_mellin_single_closed_form():
    res = mellin_k(1.5, 1.0)
    expected = float(2 ** -0.5 * _abs2_gamma((1.5 + 1j) / 2))
    assert res.value == pytest.approx(expected, rel=1e-9)
    with pytest.raises(DomainError):
        mellin_k(0.0, 1.0)


def test_macdonald_product():
    res = macdonald_rhs(1.5, 0.2, -0.4)
    expected = bessel_k_imag(1.5, math.exp(0.2)) * bessel_k_imag(1.5, math.exp(-0.4))
    assert res.value == pytest.approx(expected, rel=1e-7)


def test_q_tilde_kernel_formula():
    t, u, v = 1.0, 1.2, 0.7
    expected = float(2 ** t * _abs2_gamma((t + 1j * (u + v)) / 2) * _abs2_gamma((t + 1j * (u - v)) / 2)
                     / (4 * mpmath.pi * mpmath.gamma(t) * _abs2_gamma(1j * v)))
    assert q_tilde_kernel(t, u, v) == pytest.approx(expected, rel=1e-11)
    with pytest.raises(DomainError):
        q_tilde_kernel(t, 0.0, v)


def test_cdh_density_formula():
    s, t, u, v, c = 0.2, 0.6, 1.5, 0.8, 1.0
    d = t - s
    numer = (_abs2_gamma((c - t + 1j * v) / 2) * _abs2_gamma((d + 1j * (u + v)) / 2)
             * _abs2_gamma((d + 1j * (u - v)) / 2))
    denom = 4 * mpmath.pi * mpmath.gamma(d) * _abs2_gamma((c - s + 1j * u) / 2) * _abs2_gamma(1j * v)
    assert cdh_transition_density(s, t, u, v, c) == pytest.approx(float(numer / denom), rel=1e-11)


def test_cdh_density_vectorized_and_zero_at_origin():
    values = cdh_transition_density(0.2, 0.6, 1.5, np.array([0.0, 0.5, 1.0]), 1.0)
    assert values.shape == (3,)
    assert values[0] == 0.0
    assert np.all(values[1:] > 0)


def test_cdh_density_in_squared_coordinates():
    s, t, x, y, c = 0.2, 0.6, 2.25, 0.64, 1.0
    expected = cdh_transition_density(s, t, 1.5, 0.8, c) / (2.0 * 0.8)
    assert cdh_transition_density_T(s, t, x, y, c) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("s, t, c", [(0.6, 0.6, 1.0), (0.7, 0.2, 1.0), (0.2, 1.0, 1.0)])
def test_cdh_density_order(s, t, c):
    with pytest.raises(OrderError):
        cdh_transition_density(s, t, 1.0, 1.0, c)


def test_cdh_measure_total_mass():
    measure = cdh_transition_measure(0.2, 0.6, 2.25, 1.0)
    assert measure.total_mass() == pytest.approx(1.0, abs=1e-8)


def test_cdh_measure_from_origin():
    measure = cdh_transition_measure(0.0, 0.5, 0.0, 2.0)
    assert measure.atoms == ()
    assert measure.total_mass() == pytest.approx(1.0, abs=1e-8)
    assert cdh_transition_density_T(0.0, 0.5, 0.0, 0.25, 2.0) == pytest.approx(
        measure.density(0.25), rel=1e-14)


def test_cdh_measure_point_mass_branch():
    measure = cdh_transition_measure(0.2, 0.6, -1.0, 1.0)
    assert measure.density is None
    assert len(measure.atoms) == 1
    location, mass = measure.atoms[0]
    assert location == pytest.approx(-0.16, rel=1e-12)
    assert mass == 1.0
    assert measure.expect(lambda y: y) == pytest.approx(-0.16, rel=1e-12)


def test_cdh_measure_mixed_branch_not_implemented():
    with pytest.raises(NotImplementedError):
        cdh_transition_measure(0.2, 0.6, -0.3, 1.0)


@pytest.fixture(scope="module")
def small_cache():
    return SpectralCache.build(np.linspace(-2.0, 2.0, 9), t_min=0.2)


def test_cache_kernel_matches_quadrature(small_cache):
    matrix = small_cache.kernel(1.0)
    assert np.allclose(matrix, matrix.T, rtol=1e-10, atol=1e-14)
    for i, x in enumerate(small_cache.x_grid):
        assert matrix[i, i] == pytest.approx(heat_kernel_p(1.0, x, x), rel=1e-7)


def test_cache_is_read_only_and_checks_time(small_cache):
    assert not small_cache.k_values.flags.writeable
    with pytest.raises(DomainError):
        small_cache.kernel(0.1)


def test_cache_refinement_check(small_cache):
    assert isinstance(check_cache_kernel(small_cache, 1.0, rel_tol=1e-6), SpectralCache)
