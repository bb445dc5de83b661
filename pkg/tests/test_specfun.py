import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from screensig.errors import DomainError, ParameterError
from screensig.specfun import (BesselUnderflowWarning, bessel_j, bessel_j_prime, bessel_y,
                               bessel_y_prime, farfield_constant, farfield_point_source,
                               fundamental_solution, fundamental_solution_grad, hankel,
                               hankel_prime)


def _j_series(nu, x, terms=60):
    # independent power series, accurate for moderate x
    return math.fsum((-1) ** m * (x / 2) ** (2 * m + nu) / (math.factorial(m) * math.gamma(m + nu + 1))
                     for m in range(terms))


def test_j0_at_zero():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(2.5, 0.0) == 0.0


def test_half_order_closed_form():
    x = math.pi / 2
    assert bessel_j(0.5, x) == pytest.approx(2 / math.pi, abs=1e-14)
    # d/dx sqrt(2/(pi x)) sin x = sqrt(2/(pi x)) (cos x - sin x / (2x))
    expected = math.sqrt(2 / (math.pi * x)) * (math.cos(x) - math.sin(x) / (2 * x))
    assert bessel_j_prime(0.5, x) == pytest.approx(expected, abs=1e-13)


def test_j0_of_two_against_series():
    assert bessel_j(0, 2.0) == pytest.approx(0.223890779141236, abs=1e-12)
    assert bessel_j(0, 2.0) == pytest.approx(_j_series(0, 2.0), abs=1e-13)


def test_j0_prime_is_minus_j1():
    assert bessel_j_prime(0, 2.0) == pytest.approx(-0.576724807756873, abs=1e-12)
    assert bessel_j_prime(0, 2.0) == pytest.approx(-_j_series(1, 2.0), abs=1e-13)


def test_hankel_parts():
    h = hankel(1, 0, 2.0)
    assert h.real == pytest.approx(bessel_j(0, 2.0), abs=1e-15)
    assert h.imag == pytest.approx(0.510375672649745, abs=1e-12)
    assert hankel(2, 0, 2.0) == pytest.approx(np.conj(h))
    hp = hankel_prime(1, 0, 2.0)
    assert hp == pytest.approx(bessel_j_prime(0, 2.0) + 1j * bessel_y_prime(0, 2.0))


def test_hankel_rejects_kind():
    with pytest.raises(ParameterError):
        hankel(3, 0, 1.0)


def test_negative_order_rejected():
    with pytest.raises(ParameterError):
        bessel_j(-1.0, 1.0)


def test_underflow_reported():
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        v = bessel_j(400.0, 1e-3)
    assert v == 0.0
    assert any(issubclass(w.category, BesselUnderflowWarning) for w in rec)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 20.0), st.floats(0.05, 30.0))
def test_wronskian(nu, x):
    w = bessel_j(nu, x) * bessel_y_prime(nu, x) - bessel_j_prime(nu, x) * bessel_y(nu, x)
    assert w == pytest.approx(2 / (math.pi * x), rel=1e-9, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(1.0, 15.0), st.floats(0.1, 25.0))
def test_recurrence(nu, x):
    lhs = bessel_j(nu - 1, x) + bessel_j(nu + 1, x)
    assert lhs == pytest.approx(2 * nu / x * bessel_j(nu, x), rel=1e-9, abs=1e-13)


def test_fundamental_solution_value():
    x = np.array([1.0, 0.0])
    z = np.array([0.0, 0.0])
    assert fundamental_solution(2.0, x, z) == pytest.approx(0.25j * hankel(1, 0, 2.0))


def test_fundamental_solution_singular():
    with pytest.raises(DomainError):
        fundamental_solution(2.0, np.zeros(2), np.zeros(2))


def test_gradient_matches_finite_difference():
    x = np.array([0.7, -0.4])
    z = np.array([0.1, 0.2])
    g = fundamental_solution_grad(2.0, x, z)
    eps = 1e-6
    for i in range(2):
        e = np.zeros(2)
        e[i] = eps
        fd = (fundamental_solution(2.0, x + e, z) - fundamental_solution(2.0, x - e, z)) / (2 * eps)
        assert g[i] == pytest.approx(fd, rel=1e-7)


def test_point_source_farfield_at_origin():
    xhat = np.array([[1.0, 0.0], [0.0, 1.0], [-0.6, 0.8]])
    vals = farfield_point_source(2.0, xhat, np.zeros(2))
    assert np.allclose(vals, farfield_constant(2.0))


def test_point_source_farfield_asymptotics():
    # far-field pattern: Phi(r xhat, z) ~ e^{ikr}/sqrt(r) * Phi_inf(xhat, z)
    k, z = 2.0, np.array([0.3, -0.2])
    xhat = np.array([math.cos(0.4), math.sin(0.4)])
    r = 4000.0
    near = fundamental_solution(k, r * xhat, z) * math.sqrt(r) * np.exp(-1j * k * r)
    assert near == pytest.approx(farfield_point_source(k, xhat, z), rel=1e-3)


def test_farfield_constant_value():
    assert farfield_constant(2.0) == pytest.approx(np.exp(1j * math.pi / 4) / math.sqrt(16 * math.pi))
