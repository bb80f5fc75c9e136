"""Quadrature, tails and the fixed-point iteration."""

import math

import numpy as np
import pytest

from painleve_sigma.bounds import random_ball_element
from painleve_sigma.domain import Sector, make_parameters, make_ray_grid
from painleve_sigma.picard import (JOperator, NonContractionError, RemainderSolution, apply_J, d_dt,
                                   default_grid, fit_tail, picard_solve, sigma_residual_profile,
                                   tail_exponents, weighted_norm, weighted_norm_arrays)

NU1S = [0.5, 1.0, 1 + 1j]


def _power_rhs(nu1):
    return lambda grid, d1, d2: grid.power(-3 - 2 * nu1)


@pytest.mark.parametrize("nu1", NU1S)
@pytest.mark.parametrize("theta", [0.0, 0.7])
def test_integrals_closed_form(nu1, theta):
    p = make_parameters(nu1, 1, 1, 1)
    g = default_grid(rho=50, theta=theta, n=2048)
    J = JOperator(p, g, rhs=_power_rhs(nu1))
    Ia, Ib = J.integrals(J.R(None, None))
    want_a = -g.power(-2 - 2 * nu1) / (2 + 2 * nu1)
    want_b = -1 / g.nodes
    assert np.max(np.abs(Ia / want_a - 1)) < 1e-10
    assert np.max(np.abs(Ib / want_b - 1)) < 1e-10


@pytest.mark.parametrize("nu1", NU1S)
def test_operator_inverts_L_on_a_power(nu1):
    p = make_parameters(nu1, 1, 1, 1)
    g = default_grid(rho=50, n=1024)
    J = JOperator(p, g, rhs=_power_rhs(nu1))
    j1, j2 = J(None, None)
    A = 1 / (2 + 2 * nu1)
    assert np.allclose(j1, A * g.power(-1 - 2 * nu1), rtol=1e-10, atol=0)
    assert np.allclose(j2, -(1 + 2 * nu1) * A * g.power(-2 - 2 * nu1), rtol=1e-10, atol=0)


def test_tail_exponents():
    assert tail_exponents(1) == [0, 1, 2, 3]
    assert tail_exponents(0.5) == [0, 1, 2, 3]
    assert tail_exponents(1 + 1j) == [0, 1, 2, 3, 2 + 2j, 3 + 2j]


def test_tail_fit_recovers_coefficients():
    nu1 = 1.0
    g = default_grid(rho=50, n=1024)
    tm = g.t_max
    R = g.power(-5) * (2 + 0.5 * (tm / g.nodes) - 3 * (tm / g.nodes) ** 2)
    fit = fit_tail(g, nu1, R)
    assert np.allclose(fit.beta, [2, 0.5, -3, 0], atol=1e-9)


def test_derivative_along_ray():
    g = make_ray_grid(Sector.around(0.5, 10.0), 0.5, 1e4, 800)
    f = g.power(-3)
    assert np.allclose(d_dt(g, f), -3 * g.power(-4), rtol=1e-7, atol=0)


def test_weighted_norm():
    nu1 = 1 + 0.5j
    g = make_ray_grid(Sector.around(0.3, 2.0), 0.3, 200.0, 9)
    d1 = 2 * g.power(-1 - 2 * nu1)
    d2 = 3 * g.power(-2 - 2 * nu1)
    assert weighted_norm_arrays(g, nu1, d1, d2) == pytest.approx(3)
    assert weighted_norm(RemainderSolution(g, d1, 0 * d2), nu1) == pytest.approx(2)


def test_converged_runs(solutions, p1111):
    for sol in solutions.values():
        assert sol.converged and sol.iterations <= 30
        assert sol.increments[-1] < 1e-12
        assert sol.certificates["fixed_point_residual"] < 1e-12
        # leading behaviour D ~ 1.5 t**-3
        assert sol.delta1[-1] * sol.grid.nodes[-1] ** 3 == pytest.approx(1.5, rel=1e-4)
        assert sol.final_norm == pytest.approx(weighted_norm(sol, p1111.nu1))


def test_sampled_sigma_residual(solutions, p1111):
    sol = solutions[0.0]
    _, ratios = sigma_residual_profile(p1111, sol, stride=64)
    assert np.max(ratios) < 1e-8


def test_trivial_C_zero():
    p = make_parameters(1, 1, 1, 0)
    sol = picard_solve(p, default_grid(rho=50, n=64))
    assert sol.converged and sol.iterations == 0
    assert not np.any(sol.delta1) and not np.any(sol.delta2)
    with pytest.raises(ValueError):
        apply_J(p, sol)


def test_small_rho_fails_without_escalation(p1111):
    with pytest.raises(NonContractionError, match="increase"):
        picard_solve(p1111, default_grid(rho=3, n=512), escalate=False, residual_stride=None)


def test_escalation(p1111):
    with pytest.warns(Warning):
        sol = picard_solve(p1111, default_grid(rho=5, n=512), residual_stride=None)
    assert sol.converged
    assert sol.grid.rho == 20
    assert sol.certificates["escalated_from_rho"] == 5


def test_minimum_nodes(p1111):
    with pytest.raises(ValueError):
        picard_solve(p1111, default_grid(rho=50, n=8))


def test_leading_tail_close_to_fit(p1111, solutions):
    fit = solutions[0.0]
    lead = picard_solve(p1111, fit.grid, tail="leading", residual_stride=None)
    rel = np.max(np.abs(lead.delta1 / fit.delta1 - 1))
    assert rel < 1e-5


def test_fixed_point_is_independent_of_start(p1111, solutions):
    ref = solutions[0.0]
    rng = np.random.default_rng(11)
    for _ in range(3):
        init = random_ball_element(rng, ref.grid, p1111.nu1, 9.0)
        sol = picard_solve(p1111, ref.grid, init=init, residual_stride=None)
        assert weighted_norm_arrays(ref.grid, p1111.nu1, sol.delta1 - ref.delta1,
                                    sol.delta2 - ref.delta2) < 1e-11


@pytest.mark.parametrize("C", [1j, -0.5 + 0.25j])
def test_complex_C_and_nu1(C):
    p = make_parameters(1 + 0.5j, 0.5, 2, C)
    sol = picard_solve(p, default_grid(rho=60, theta=0.3, n=2048), residual_stride=128)
    assert sol.converged
    assert sol.certificates["sigma_residual_max"] < 1e-8


def test_geometric_decay_of_increments(solutions):
    inc = solutions[math.pi / 4].increments
    ratios = [b / a for a, b in zip(inc[:4], inc[1:5])]
    assert max(ratios) < 0.1
