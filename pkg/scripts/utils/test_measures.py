"""Normalizing constants, dual densities, entrance laws and dual Hahn polynomials."""

import math

import mpmath
import numpy as np
import pytest

from errors import DomainError, FavardViolation, MethodDomain, OrderError, RangeError, StripError
from measures import (
    Params, H_fun, cdh_poly, cdh_poly_table, entrance_atoms, entrance_law_p, favard_check, g_fun,
    h_fun, harmonic_weight, laplace_C_closed, laplace_C_numeric, normalizing_C, normalizing_C_quad,
    normalizing_K, phi_density, phi_density_factorized,
)


def test_params_validation():
    with pytest.raises(RangeError):
        Params(a=-1.0, c=1.0)
    with pytest.raises(RangeError):
        Params(a=1.0, c=1.0, tau=0.0)
    with pytest.raises(RangeError):
        Params(a=float('inf'), c=1.0)


def test_params_helpers():
    params = Params(a=1.5, c=0.7, tau=2.0)
    assert params.swapped() == Params(a=0.7, c=1.5, tau=2.0)
    shifted = params.shifted(0.2)
    assert (shifted.a, shifted.c, shifted.tau) == pytest.approx((1.7, 0.5, 2.0), rel=1e-14)
    assert params.S == 0.7
    assert Params(a=1.0, c=3.0).S == 2.0
    assert Params.from_mapping({'a': '1', 'c': 2}) == Params(a=1.0, c=2.0, tau=1.0)


def test_C_against_mpmath(unit_params):
    def integrand(u):
        return (mpmath.exp(-u * u) * abs(mpmath.gamma((1 + 1j * u) / 2)) ** 4
                / abs(mpmath.gamma(1j * u)) ** 2)

    expected = float(4 / (8 * mpmath.pi) * mpmath.quad(integrand, [0, 2, 6, mpmath.inf]))
    assert normalizing_C(unit_params) == pytest.approx(expected, rel=1e-10)


def test_C_symmetric(skew_params):
    assert normalizing_C(skew_params) == normalizing_C(skew_params.swapped())


def test_C_spectral_matches_direct_double_integral(skew_params):
    spectral = normalizing_C(skew_params)
    direct = normalizing_C(skew_params, method='direct2d')
    assert direct == pytest.approx(spectral, rel=1e-6)


def test_C_method_domains():
    with pytest.raises(MethodDomain):
        normalizing_C_quad(Params(a=-0.5, c=2.0), method='direct2d')
    with pytest.raises(MethodDomain):
        normalizing_C_quad(Params(a=-1.5, c=2.0), method='hartman_watson')
    with pytest.raises(MethodDomain):
        normalizing_C_quad(Params(a=1.0, c=1.0), method='trapezoid')


def test_C_continuous_across_first_residue():
    below = normalizing_C(Params(a=-1e-5, c=1.0))
    above = normalizing_C(Params(a=1e-5, c=1.0))
    assert below == pytest.approx(above, rel=1e-4)


def test_C_with_a_residue_is_positive():
    assert normalizing_C(Params(a=-0.5, c=2.0)) > 0.0


@pytest.mark.parametrize("a, c", [(-0.5, 1.5), (-0.8, 1.2), (-0.25, 1.75)])
def test_C_when_c_equals_a_plus_two(a, c):
    value = normalizing_C(Params(a=a, c=c))
    assert value > 0.0
    assert normalizing_C(Params(a=a, c=c + 1e-6)) == pytest.approx(value, rel=1e-4)
    assert normalizing_K(Params(a=a, c=c)) > 0.0
    assert laplace_C_numeric(a, c, 1.5).value > 0.0


def test_K_relation(unit_params):
    total = unit_params.a + unit_params.c
    expected = total * (total + 2.0) / 2.0 ** (total + 1.0) * normalizing_C(unit_params)
    assert normalizing_K(unit_params) == pytest.approx(expected, rel=1e-14)


def test_laplace_closed_form_matches_numeric():
    closed = laplace_C_closed(0.7, 0.9, 1.5)
    numeric = laplace_C_numeric(0.7, 0.9, 1.5)
    assert numeric.converged
    assert numeric.value == pytest.approx(closed, rel=1e-4)


def test_laplace_strip():
    with pytest.raises(StripError):
        laplace_C_closed(1.5, 1.0, 1.0)
    with pytest.raises(DomainError):
        laplace_C_closed(0.5, 0.5, -1.0)


def test_h_and_g():
    assert h_fun(0.0, 0.0, 2.0) == pytest.approx(1.0, rel=1e-14)
    assert g_fun(0.0, 0.0, 2.0) == pytest.approx(1.0, rel=1e-14)
    expected = float(2 ** -1.5 * abs(mpmath.gamma((0.5 + 2j) / 2)) ** 2)
    assert h_fun(0.5, 2.0, 1.0) == pytest.approx(expected, rel=1e-12)
    with pytest.raises(OrderError):
        h_fun(1.0, 1.0, 1.0)
    with pytest.raises(RangeError):
        g_fun(-1.0, 1.0, 1.0)


def test_harmonic_function_at_terminal_time(unit_params):
    assert H_fun(1.0, 0.3, unit_params) == pytest.approx(math.exp(0.3), rel=1e-15)
    with pytest.raises(DomainError):
        harmonic_weight(0.5, 0.0, -1.0, 1.0)
    with pytest.raises(DomainError):
        H_fun(1.5, 0.0, unit_params)


def test_harmonic_function_positive(unit_params):
    assert H_fun(0.5, 0.0, unit_params) > 0.0


def test_phi_forms_agree(skew_params):
    u = np.array([0.1, 1.0, 3.0])
    C = normalizing_C(skew_params)
    direct = phi_density(0.3, u, skew_params, C=C)
    factored = phi_density_factorized(0.3, u, skew_params, C=C)
    assert np.allclose(direct, factored, rtol=1e-10)


def test_phi_range(unit_params):
    with pytest.raises(RangeError):
        phi_density(1.0, 1.0, unit_params, C=1.0)
    with pytest.raises(RangeError):
        phi_density(-1.2, 1.0, unit_params, C=1.0)


def test_entrance_law_without_atoms(unit_params):
    law = entrance_law_p(0.0, unit_params)
    assert law.atoms == ()
    assert law.laplace() == pytest.approx(normalizing_K(unit_params), rel=1e-9)


def test_entrance_law_atoms():
    params = Params(a=-0.5, c=2.0)
    atoms = entrance_atoms(0.0, params)
    assert len(atoms) == 1
    location, mass = atoms[0]
    assert location == pytest.approx(-0.25, rel=1e-14)
    assert mass > 0.0
    assert entrance_atoms(0.6, params) == ()


def test_entrance_density_in_both_coordinates(unit_params):
    law = entrance_law_p(0.2, unit_params)
    assert law.density(4.0) == pytest.approx(law.density_u(2.0) / 4.0, rel=1e-14)
    assert law.density(-1.0) == 0.0
    with pytest.raises(OrderError):
        entrance_law_p(1.5, unit_params)


def test_cdh_poly_low_orders():
    x = np.array([0.0, 1.0, 2.5])
    table = cdh_poly_table(2, x, 0.0, 0.0, 0.0)
    assert np.all(table[0] == 1.0)
    assert np.allclose(table[1], x)
    assert cdh_poly(0, 3.0, 0.5, 0.5, 0.5) == 1.0


def test_cdh_poly_rejects_bad_degree():
    with pytest.raises(DomainError):
        cdh_poly(-1, 1.0, 0.5, 0.5, 0.5)


def test_favard_positive_parameters():
    products, ok = favard_check(0.5, 0.25 + 0.5j, 0.25 - 0.5j, 6)
    assert ok
    assert len(products) == 7


def test_favard_violation_is_warned():
    _, ok = favard_check(-1.0, 0.5, 1.5, 3)
    assert not ok
    with pytest.warns(FavardViolation):
        cdh_poly(2, 1.0, -1.0, 0.5, 1.5)
