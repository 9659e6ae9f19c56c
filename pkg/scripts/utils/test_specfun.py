"""Special functions against mpmath and scipy reference values."""

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from scipy import special

from errors import DomainError, PoleError
from specfun import (
    bessel_i, bessel_k_imag, bessel_k_imag_grid, bessel_k_real, gamma_abs2, gamma_prod_abs2,
    k0_upper_bound, log_gamma, log_gamma_abs2, log_mu_density, log_sinh, mu_density, pochhammer,
)


@pytest.mark.parametrize("z", [0.5, 3.7, 1.0 + 2.0j, 0.25 - 7.5j, -2.5 + 0.1j])
def test_log_gamma_matches_mpmath(z):
    expected = complex(mpmath.loggamma(z))
    assert log_gamma(z) == pytest.approx(expected, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize("z", [0.0, -1.0, -2.0 + 1e-13, -7.0])
def test_log_gamma_rejects_poles(z):
    with pytest.raises(PoleError):
        log_gamma(z)


def test_log_gamma_rejects_non_finite():
    with pytest.raises(DomainError):
        log_gamma(float('nan'))


def test_abs2_on_imaginary_axis():
    u = np.array([0.01, 1.0, 12.0, 150.0])
    expected = np.log(math.pi) - np.log(u) - np.array([float(mpmath.log(mpmath.sinh(math.pi * x)))
                                                         for x in u])
    assert np.allclose(log_gamma_abs2(1j * u), expected, rtol=1e-13)


def test_abs2_off_axis():
    z = 0.7 + 2.3j
    assert gamma_abs2(z) == pytest.approx(float(abs(mpmath.gamma(z)) ** 2), rel=1e-12)


def test_gamma_prod_abs2():
    zs = [0.5 + 1j, 1.25 - 0.5j]
    expected = float(abs(mpmath.gamma(zs[0])) ** 2 * abs(mpmath.gamma(zs[1])) ** 2)
    assert gamma_prod_abs2(zs) == pytest.approx(expected, rel=1e-12)
    assert gamma_prod_abs2([]) == 1.0


def test_pochhammer_exact_with_fractions():
    assert pochhammer(Fraction(1, 2), 3) == Fraction(15, 8)
    assert pochhammer(5, 0) == 1
    assert pochhammer(-2, 3) == 0


@pytest.mark.parametrize("n", [-1, 1.5, True])
def test_pochhammer_rejects_bad_order(n):
    with pytest.raises(DomainError):
        pochhammer(1.0, n)


def test_log_sinh_large_argument():
    assert log_sinh(800.0) == pytest.approx(800.0 - math.log(2.0), rel=1e-15)
    assert log_sinh(0.5) == pytest.approx(math.log(math.sinh(0.5)), rel=1e-14)


def test_mu_density():
    assert mu_density(0.0) == 0.0
    assert mu_density(1.5) == pytest.approx(2.0 / math.pi ** 2 * 1.5 * math.sinh(1.5 * math.pi),
                                            rel=1e-14)
    assert math.exp(log_mu_density(3.0)) == pytest.approx(mu_density(3.0), rel=1e-13)
    with pytest.raises(DomainError):
        mu_density(-0.1)


@pytest.mark.parametrize("u, z", [
    (0.0, 3.0),
    (0.5, 1.0),
    (1.0, 0.01),
    (2.0, 0.5),
    (3.0, 2.0),
    (5.0, 10.0),
    (0.2, 40.0),
])
def test_bessel_k_imag_matches_mpmath(u, z):
    expected = float(mpmath.re(mpmath.besselk(1j * u, z)))
    assert bessel_k_imag(u, z) == pytest.approx(expected, rel=1e-8, abs=1e-13)


def test_bessel_k_imag_is_even_in_order():
    assert bessel_k_imag(-2.0, 1.0) == bessel_k_imag(2.0, 1.0)


@pytest.mark.parametrize("u, z", [(1.0, 1e-9), (1.0, 701.0), (61.0, 1.0)])
def test_bessel_k_imag_domain(u, z):
    with pytest.raises(DomainError):
        bessel_k_imag(u, z)


def test_bessel_k_grid_agrees_with_scalar_calls():
    u = np.array([0.0, 0.7, 2.5, 6.0])
    z = np.array([0.05, 1.0, 8.0])
    grid = bessel_k_imag_grid(u, z)
    assert grid.shape == (3, 4)
    for i, zi in enumerate(z):
        for j, uj in enumerate(u):
            assert grid[i, j] == pytest.approx(bessel_k_imag(uj, zi), rel=1e-9, abs=1e-15)


def test_k0_upper_bound():
    x = np.array([1.0, 2.0, 10.0])
    assert np.all(special.k0(x) <= k0_upper_bound(x))
    with pytest.raises(DomainError):
        k0_upper_bound(0.5)


def test_bessel_k_real():
    assert bessel_k_real(0.5, 2.0) == pytest.approx(math.exp(-2.0) * math.sqrt(math.pi / 4.0),
                                                    rel=1e-13)
    with pytest.raises(DomainError):
        bessel_k_real(0.0, 0.0)


@pytest.mark.parametrize("lam, r", [(0.5, 0.1), (1.5, 2.0), (3.0, 25.0), (20.0, 90.0)])
def test_bessel_i_matches_scipy(lam, r):
    assert bessel_i(lam, r) == pytest.approx(special.iv(lam, r), rel=1e-12)


@pytest.mark.parametrize("lam, r", [(0.0, 1.0), (51.0, 1.0), (1.0, 0.0), (1.0, 101.0)])
def test_bessel_i_domain(lam, r):
    with pytest.raises(DomainError):
        bessel_i(lam, r)
