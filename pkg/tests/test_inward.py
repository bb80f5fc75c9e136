"""Inward Runge-Kutta integration along a ray."""

import numpy as np
import pytest

from painleve_sigma.domain import make_parameters
from painleve_sigma.inward import integrate_inward
from painleve_sigma.picard import default_grid


def test_zero_rhs_is_affine():
    p = make_parameters(1, 1, 1, 1)
    t0, t1 = 1e4, 10.0
    sol = integrate_inward(p, t0, t1, init=(2.0 + 1e4, 1.0), rhs="zero", n=64)
    assert np.allclose(sol.delta1, 2 + sol.grid.moduli, rtol=1e-11)
    assert np.allclose(sol.delta2, 1, rtol=1e-11)


@pytest.mark.parametrize("nu1", [0.5, 1 + 1j])
def test_homogeneous_solution_is_followed(nu1):
    p = make_parameters(nu1, 1, 1, 1)
    th = 0.4
    t0, t1 = 1e3 * np.exp(1j * th), 10 * np.exp(1j * th)
    g = default_grid(rho=10, theta=th, t_max=1e3, n=64)
    w0 = g.power(-2 * nu1)[-1]
    sol = integrate_inward(p, t0, t1, init=(w0, -2 * nu1 * w0 / t0), rhs="homogeneous", grid=g)
    assert np.allclose(sol.delta1, g.power(-2 * nu1), rtol=1e-10, atol=0)


def test_agrees_with_picard(solutions, p1111):
    for theta, sol in solutions.items():
        rk = integrate_inward(p1111, 1e6 * np.exp(1j * theta), 50 * np.exp(1j * theta), grid=sol.grid)
        assert rk.grid.n == sol.grid.n
        assert np.max(np.abs(rk.delta1 / sol.delta1 - 1)) < 1e-10


def test_zero_initial_data_error_law(p1111):
    """Starting from D = 0 at t_start leaves a relative error of (4/3) t / t_start."""
    t_start = 1e6
    ref = integrate_inward(p1111, t_start, 100.0, n=128)
    bare = integrate_inward(p1111, t_start, 100.0, init=(0, 0), grid=ref.grid)
    r = ref.grid.moduli
    sel = r <= 1e4
    rel = np.abs(bare.delta1[sel] / ref.delta1[sel] - 1)
    assert np.allclose(rel, 4 / 3 * r[sel] / t_start, rtol=0.05)


def test_argument_checks(p1111):
    with pytest.raises(ValueError):
        integrate_inward(p1111, 10.0, 100.0)
    with pytest.raises(ValueError):
        integrate_inward(p1111, 100.0, 10j)


def test_C_zero_is_exact():
    p = make_parameters(1, 1, 1, 0)
    sol = integrate_inward(p, 1e4, 10.0, n=16)
    assert not np.any(sol.delta1)
