"""Adaptive, semi-infinite, spectral and nested quadrature."""

import math

import numpy as np
import pytest

from errors import DimensionError, DomainError, NonConvergenceError, TailViolation
from quad import (
    QuadResult, TailPolicy, gauss_legendre_panels, integrate_adaptive, integrate_interval,
    integrate_nested, integrate_semi_infinite, integrate_spectral, require_converged,
)


def test_adaptive_sine():
    res = integrate_adaptive(np.sin, 0.0, math.pi, tol=1e-13)
    assert res.converged
    assert res.value == pytest.approx(2.0, abs=1e-13)
    assert res.cutoff is None


def test_adaptive_budget_exhausted():
    res = integrate_adaptive(np.sqrt, 0.0, 1.0, tol=1e-15, max_panels=1)
    assert not res.converged
    with pytest.raises(NonConvergenceError) as info:
        require_converged(res, "sqrt")
    assert info.value.result is res


def test_adaptive_scalar_integrand():
    res = integrate_adaptive(lambda x: math.exp(-x), 0.0, 2.0, tol=1e-12, vectorized=False)
    assert res.value == pytest.approx(1.0 - math.exp(-2.0), abs=1e-12)


@pytest.mark.parametrize("a, b", [(1.0, 1.0), (2.0, 0.0), (0.0, math.inf)])
def test_adaptive_rejects_bad_limits(a, b):
    with pytest.raises(DomainError):
        integrate_adaptive(np.sin, a, b)


def test_semi_infinite_gaussian():
    res = integrate_semi_infinite(lambda x: np.exp(-x * x), 0.0, tol=1e-11,
                                  tail=TailPolicy.gaussian(1.0))
    assert res.converged
    assert res.value == pytest.approx(0.5 * math.sqrt(math.pi), abs=1e-10)
    assert res.cutoff > 4.0


def test_semi_infinite_exponential():
    res = integrate_semi_infinite(lambda x: np.exp(-2.0 * x), 1.0, tol=1e-11,
                                  tail=TailPolicy.exponential(2.0))
    assert res.value == pytest.approx(0.5 * math.exp(-2.0), abs=1e-10)


def test_semi_infinite_detects_growth():
    with pytest.raises(TailViolation):
        integrate_semi_infinite(lambda x: np.exp(3.0 * x), 0.0, tol=1e-10,
                                tail=TailPolicy.gaussian(1.0))


def test_semi_infinite_needs_policy():
    with pytest.raises(DomainError):
        integrate_semi_infinite(np.exp, 0.0)


def test_tail_policy_validation():
    with pytest.raises(DomainError):
        TailPolicy.gaussian(0.0)
    with pytest.raises(DomainError):
        TailPolicy.exponential(-1.0)


def test_interval_whole_line():
    res = integrate_interval(lambda x: np.exp(-x * x), TailPolicy.gaussian(1.0),
                             TailPolicy.gaussian(1.0), tol=1e-11)
    assert res.value == pytest.approx(math.sqrt(math.pi), abs=1e-10)


def test_interval_left_infinite():
    res = integrate_interval(np.exp, TailPolicy.exponential(1.0), 0.0, tol=1e-11)
    assert res.value == pytest.approx(1.0, abs=1e-10)
    assert res.cutoff < 0


def test_spectral_constant_symbol():
    # int e^{-u^2} (2/pi^2) u sinh(pi u) du = e^{pi^2/4} / (2 sqrt(pi))
    res = integrate_spectral(lambda u: np.ones_like(u), 1.0, tol=1e-10)
    assert res.converged
    assert res.value == pytest.approx(math.exp(math.pi ** 2 / 4.0) / (2.0 * math.sqrt(math.pi)),
                                      rel=1e-9)


def test_spectral_needs_positive_time():
    with pytest.raises(DomainError):
        integrate_spectral(lambda u: u, 0.0)


def test_nested_two_dimensions():
    res = integrate_nested(lambda x, y: np.exp(-x - y), [(0.0, 1.0), (0.0, 1.0)], tol=1e-10)
    assert res.converged
    assert res.value == pytest.approx((1.0 - math.exp(-1.0)) ** 2, abs=1e-9)


def test_nested_with_infinite_inner_range():
    res = integrate_nested(lambda x, y: x * np.exp(-x * y * y),
                           [(1.0, 2.0), (0.0, TailPolicy.gaussian(1.0))], tol=1e-9)
    # int_1^2 x sqrt(pi/x)/2 dx
    expected = 0.5 * math.sqrt(math.pi) * (2.0 / 3.0) * (2.0 ** 1.5 - 1.0)
    assert res.value == pytest.approx(expected, abs=1e-8)


def test_nested_dimension_limit():
    with pytest.raises(DimensionError):
        integrate_nested(lambda *xs: xs[-1], [(0.0, 1.0)] * 4)


def test_gauss_legendre_panels():
    nodes, weights = gauss_legendre_panels(0.0, 2.0, 0.5)
    assert nodes.size == weights.size == 4 * 16
    assert weights.sum() == pytest.approx(2.0, rel=1e-14)
    assert np.sum(weights * nodes ** 5) == pytest.approx(64.0 / 6.0, rel=1e-13)
    with pytest.raises(DomainError):
        gauss_legendre_panels(1.0, 1.0, 0.1)


def test_quad_result_is_frozen():
    res = QuadResult(value=1.0, err_est=0.0, evals=1, converged=True)
    with pytest.raises(AttributeError):
        res.value = 2.0
