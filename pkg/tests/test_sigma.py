"""The remainder equation: T coefficients, the root F, R and its pieces."""

import math
import warnings

import numpy as np
import pytest

from painleve_sigma.domain import Sector, make_parameters, make_ray_grid
from painleve_sigma.sigma import (DegenerateError, DiscriminantWarning, RegimeError, SigmaModel, StatePoint,
                                  T_reference, compose_u, eval_F, eval_R, eval_T, exact_solution,
                                  leading_ctilde4, sigma_residual, sigma_residual_mp, sigma_scale)

PARAMS = [make_parameters(1, 1, 1, 1), make_parameters(0.5, 0.3, 2, 1j),
          make_parameters(1 + 1j, 1, -0.5, 0.7 - 0.2j)]


def _ray_points(n=100, lo=2.0, hi=1e4, span=(-1.5, 1.5), seed=0):
    rng = np.random.default_rng(seed)
    r = np.exp(rng.uniform(math.log(lo), math.log(hi), n))
    th = rng.uniform(*span, n)
    return r * np.exp(1j * th)


@pytest.mark.parametrize("p", PARAMS)
def test_exact_solution_residual(p):
    t = _ray_points()
    u, up, upp = exact_solution(p, t)
    res = np.abs(sigma_residual(p, t, u, up, upp))
    scale = sigma_scale(p, t, u, up, upp, kind="constituents")
    assert np.all(res <= 1e-13 * scale)


def test_scale_kinds():
    p = PARAMS[0]
    t = np.array([10.0 + 0j])
    u, up, upp = exact_solution(p, t)
    assert sigma_scale(p, t, u, up, upp)[0] == 0
    assert sigma_scale(p, t, u, up, upp, kind="constituents")[0] > 0
    with pytest.raises(ValueError):
        sigma_scale(p, t, u, up, upp, kind="other")


@pytest.mark.parametrize("p", PARAMS)
def test_T_against_multiprecision(p):
    rng = np.random.default_rng(3)
    for t in _ray_points(8, lo=20, hi=1e3, seed=1):
        st = StatePoint(t, complex(*rng.normal(size=2)) * abs(t) ** -3, complex(*rng.normal(size=2)) * abs(t) ** -4)
        got = eval_T(p, st)
        want = [complex(v) for v in T_reference(p, st)]
        for g, w in zip((got.T0, got.T1, got.T2), want):
            assert abs(g - w) <= 1e-12 * abs(w)


def test_degenerate_C_zero():
    p = make_parameters(1, 1, 1, 0)
    st = StatePoint(100.0 + 0j)
    with pytest.raises(DegenerateError):
        eval_T(p, st)
    with pytest.raises(DegenerateError):
        eval_F(p, st)


def test_regime_checks():
    p = PARAMS[0]
    with pytest.raises(RegimeError, match="increase"):
        eval_F(p, StatePoint(1.5 + 0j, 5.0, 5.0))
    # at t = 5 the bare expansion sits in the warning band (ratio ~ 0.58)
    m = SigmaModel(p, np.log([5.0]), 0.0)
    T0, T1, T2 = m.eval_T(np.zeros(1), np.zeros(1))
    assert 0.5 <= abs(4 * T0[0] * T2[0] / T1[0] ** 2) < 1
    with pytest.warns(DiscriminantWarning):
        m.F(np.zeros(1), np.zeros(1))


def test_root_is_the_small_branch():
    p = PARAMS[1]
    st = StatePoint(40 * np.exp(0.3j), 1e-5, -2e-7)
    m = SigmaModel(p, np.array([st.logt[0]]), st.branch)
    F = m.F(np.array([st.delta1]), np.array([st.delta2]))[0]
    plus, minus = (v[0] for v in m.F_branches(np.array([st.delta1]), np.array([st.delta2])))
    near = plus if abs(plus - F) < abs(minus - F) else minus
    assert abs(F - near) <= 1e-9 * abs(F)
    other = minus if near is plus else plus
    assert abs(F) < abs(other)


@pytest.mark.parametrize("p", PARAMS)
def test_F_solves_sigma_form(p):
    """The composed u with D'' = F satisfies the equation to high relative accuracy."""
    for t in _ray_points(6, lo=30, hi=1e3, span=(-1, 1), seed=5):
        st = StatePoint(t, 1e-2 * abs(t) ** -3, -3e-2 * abs(t) ** -4)
        F = eval_F(p, st)
        res, scale = sigma_residual_mp(p, t, st.branch, st.delta1, st.delta2, F, dps=40)
        assert res <= 1e-12 * scale


def test_leading_constant_of_F():
    p = PARAMS[0]
    assert leading_ctilde4(p) == pytest.approx(-6.0)
    for t in (1e4, 1e5):
        assert eval_F(p, StatePoint(t + 0j)) * t ** 5 == pytest.approx(6.0, rel=10 / t)


@pytest.mark.parametrize("p", PARAMS)
def test_decomposed_R_matches_direct(p):
    for t in _ray_points(6, lo=50, hi=1e4, span=(-1, 1), seed=7):
        st = StatePoint(t, 0.3 * t ** -3, -0.2 * t ** -4)
        r, pieces = eval_R(p, st, decomposed=True)
        assert abs(pieces["R"] - r) <= 1e-9 * abs(r)
        assert set(pieces) == {"F0", "F1s", "Rt2", "tau", "R"}


@pytest.mark.parametrize("nu1", [0.5, 1.0, 1 + 1j])
def test_L_annihilates_homogeneous_solutions(nu1):
    p = make_parameters(nu1, 1, 1, 1)
    g = make_ray_grid(Sector.around(0.4, 2.0), 0.4, 1e6, 512)
    m = SigmaModel.from_grid(p, g)
    t = g.nodes
    it = 1 / t
    one = np.ones_like(t)
    lin = m.L_operator(t, one, 0 * t)
    scale = np.abs(2 * nu1 * it)
    assert np.all(np.abs(lin) <= 1e-13 * scale)
    w = g.power(-2 * nu1)
    a = -2 * nu1
    pw = m.L_operator(w, a * w * it, a * (a - 1) * w * it ** 2)
    scale = np.abs(a * (a - 1) * w * it ** 2)
    assert np.all(np.abs(pw) <= 1e-13 * scale)


def test_compose_u_matches_expansion():
    p = PARAMS[0]
    st = StatePoint(10.0 + 0j, 1e-3, 2e-4)
    u, up, upp = compose_u(p, st, d2=5e-5)
    assert u == pytest.approx(-10 + 1 + 0.01 + 1e-3)
    assert up == pytest.approx(-1 - 2 * 0.01 / 10 + 2e-4)
    assert upp == pytest.approx(6 * 0.01 / 100 + 5e-5)
    assert compose_u(p, st)[2] is None


def test_vectorized_model_agrees_with_pointwise():
    p = PARAMS[2]
    g = make_ray_grid(Sector.around(0.2, 20.0), 0.2, 2e3, 5)
    m = SigmaModel.from_grid(p, g)
    d1 = 0.1 * g.power(-1 - 2 * p.nu1)
    d2 = -0.1 * g.power(-2 - 2 * p.nu1)
    with warnings.catch_warnings():
        warnings.simplefilter("error", DiscriminantWarning)
        F = m.F(d1, d2)
    for k in range(g.n):
        assert F[k] == pytest.approx(eval_F(p, StatePoint(g.nodes[k], d1[k], d2[k], g.theta)), rel=1e-13)
