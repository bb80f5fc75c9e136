"""Parameters, sectors, ray grids and complex powers."""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from painleve_sigma.domain import (DomainError, Parameters, Sector, cpow, cpow_log, cpow_mp,
                                   make_parameters, make_ray_grid)


def test_parameters_validation():
    p = make_parameters(1, 1, 1, 1)
    assert p.nu1 == 1 + 0j
    with pytest.raises(DomainError, match="Re"):
        make_parameters(0, 1, 1, 1)
    with pytest.raises(DomainError):
        make_parameters(-0.5 + 2j, 1, 1, 1)
    with pytest.raises(DomainError):
        make_parameters(1, math.inf, 1, 1)


@given(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False))
def test_parameters_round_trip(C):
    p = make_parameters(1 + 0.5j, 2, -1j, C)
    assert Parameters.from_dict(p.to_dict()) == p
    assert p.with_C(0).C == 0


def test_sector():
    s = Sector.around(0.0, 10.0)
    assert s.contains_angle(1.0) and not s.contains_angle(2.0)
    with pytest.raises(DomainError):
        Sector(0.0, 7.0, 10.0)
    with pytest.raises(DomainError):
        Sector(0.0, 1.0, 0.5)


def test_make_ray_grid():
    s = Sector.around(0.0, 10.0)
    g = make_ray_grid(s, 0.0, 1000.0, 3)
    assert np.allclose(g.moduli, [10, 100, 1000], rtol=1e-15)
    assert g.rho == 10.0 and g.t_max == 1000.0
    u = make_ray_grid(s, 0.5, 30.0, 3, grading="uniform")
    assert np.allclose(u.moduli, [10, 20, 30])
    assert np.allclose(u.nodes, u.moduli * np.exp(0.5j))
    with pytest.raises(DomainError):
        make_ray_grid(s, 0.0, 10.0, 8)
    with pytest.raises(DomainError):
        make_ray_grid(s, 0.0, 100.0, 1)
    with pytest.raises(DomainError):
        make_ray_grid(s, 2.0, 100.0, 8)


def test_grid_powers():
    g = make_ray_grid(Sector.around(0.3, 2.0), 0.3, 200.0, 7)
    p = 1.5 + 0.25j
    assert np.allclose(g.power(p), g.nodes ** p, rtol=1e-14)
    assert np.allclose(g.power_modulus(p), np.abs(g.power(p)), rtol=1e-14)


def test_cpow_branch():
    # on the ray theta = 3 the branch is arg t = 3, not the principal value
    t = 5 * np.exp(3j)
    assert np.isclose(cpow(t, 0.5, theta=3.0), np.sqrt(5) * np.exp(1.5j))
    assert np.isclose(cpow(t, 0.5, theta=3.0 - 2 * math.pi), -np.sqrt(5) * np.exp(1.5j))


exps = st.integers(-256, 256).map(lambda k: k / 64)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.1, 30), st.floats(-3, 3), exps, exps, exps, exps)
def test_cpow_exponent_law(x, theta, ar, ai, br, bi):
    a, b = complex(ar, ai), complex(br, bi)
    lhs = cpow_log(x, theta, a) * cpow_log(x, theta, b)
    rhs = cpow_log(x, theta, a + b)
    assert abs(lhs - rhs) <= 8 * np.finfo(float).eps * abs(rhs)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 30), st.floats(-3, 3), exps, exps)
def test_cpow_against_mpmath(x, theta, pr, pi):
    p = complex(pr, pi)
    with mpmath.workdps(40):
        want = complex(mpmath.exp(p * (mpmath.mpf(x) + 1j * mpmath.mpf(theta))))
    got = cpow_log(x, theta, p)
    assert abs(got - want) <= 4 * np.finfo(float).eps * abs(want)


def test_cpow_mp_matches():
    t = 7 * np.exp(0.4j)
    assert abs(complex(cpow_mp(t, 1 + 1j, 0.4)) - cpow(t, 1 + 1j, 0.4)) < 1e-14 * abs(cpow(t, 1 + 1j, 0.4))
