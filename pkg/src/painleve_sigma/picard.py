"""Picard iteration of the integral operator for the remainder.

With ``I_a(t) = int_oo^t R ds`` and ``I_b(t) = int_oo^t s**(1+2 nu1) R ds``
along the ray, the operator is::

    J1 = (t I_a - t**(-2 nu1) I_b) / (2 nu1 + 1)
    J2 = (I_a + 2 nu1 t**(-1-2 nu1) I_b) / (2 nu1 + 1)

``J1`` solves ``L[J1] = R`` for ``L[phi] = phi'' + 2 nu1 phi'/t - 2 nu1 phi/t**2``
and ``J2 = J1'``.  Integrals are taken in ``xi = log|s|`` with local
interpolatory weights on each grid cell and an analytic tail beyond the last
node.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .domain import Parameters, RayGrid, Sector, make_ray_grid
from .sigma import RegimeError, SigmaModel, leading_ctilde4, sigma_residual_mp

MIN_SOLVER_NODES = 16
STENCIL = 8
TAIL_EXPONENT_MAX = 3.0
TAIL_FIT_DECADES = 1.0
RESIDUAL_STENCIL = 9  # D'' for the residual check; keeps the check below the solver error


class NonContractionError(RuntimeError):
    """Increments stopped decreasing; the inner radius is too small."""


@dataclass
class RemainderSolution:
    """Remainder samples on a ray grid plus convergence metadata.

    Attributes:
        grid: The ray grid.
        delta1: ``D`` at the nodes.
        delta2: ``D'`` at the nodes.
        iterations: Picard steps taken.
        increments: Weighted-norm distance between successive iterates.
        converged: Whether the last increment fell below the tolerance.
        final_norm: Weighted norm of the returned iterate.
        certificates: Post-hoc checks recorded by the solver.
        message: Human-readable status.
    """

    grid: RayGrid
    delta1: np.ndarray
    delta2: np.ndarray
    iterations: int = 0
    increments: list = field(default_factory=list)
    converged: bool = False
    final_norm: float = 0.0
    certificates: dict = field(default_factory=dict)
    message: str = ""

    def metadata(self) -> dict:
        return {
            "iterations": self.iterations,
            "increments": [float(v) for v in self.increments],
            "converged": bool(self.converged),
            "final_norm": float(self.final_norm),
            "certificates": self.certificates,
            "message": self.message,
            "rho": self.grid.rho,
            "t_max": self.grid.t_max,
            "n": self.grid.n,
            "theta": self.grid.theta,
        }


# ---------------------------------------------------------------------------
# norms and weights


def weighted_norm_arrays(grid: RayGrid, nu1: complex, d1, d2) -> float:
    w1 = grid.power_modulus(1 + 2 * nu1)
    w2 = grid.power_modulus(2 + 2 * nu1)
    return float(max(np.max(w1 * np.abs(d1)), np.max(w2 * np.abs(d2))))


def weighted_norm(sol: RemainderSolution, nu1: complex) -> float:
    """``max(sup |t**(1+2nu1)| |D1|, sup |t**(2+2nu1)| |D2|)`` over the nodes.

    ``|t**alpha|`` is the modulus on the ray's branch.
    """
    return weighted_norm_arrays(sol.grid, nu1, sol.delta1, sol.delta2)


def _local_weights(nodes: np.ndarray, lo: float, hi: float, moment: bool) -> np.ndarray:
    """Weights of the interpolant through ``nodes``: its integral over [lo, hi],
    or (``moment=False``) its first derivative at ``lo``."""
    c = nodes.mean()
    s = max(np.ptp(nodes), 1e-300)
    u = (nodes - c) / s
    m = len(nodes)
    V = np.vander(u, m, increasing=True).T  # V[j, i] = u_i**j
    j = np.arange(m)
    if moment:
        a, b = (lo - c) / s, (hi - c) / s
        rhs = (b ** (j + 1) - a ** (j + 1)) / (j + 1) * s
    else:
        a = (lo - c) / s
        rhs = np.where(j > 0, j * a ** np.maximum(j - 1, 0), 0.0) / s
    return np.linalg.solve(V, rhs)


def _stencil(k: int, n: int, m: int, centre: float) -> np.ndarray:
    start = int(round(centre - (m - 1) / 2))
    start = min(max(start, 0), n - m)
    return np.arange(start, start + m)


class CellQuadrature:
    """Per-cell interpolatory weights in ``xi = log|s|``."""

    def __init__(self, x: np.ndarray, m: int = STENCIL):
        n = x.size
        m = min(m, n)
        self.idx = np.empty((n - 1, m), dtype=int)
        self.w = np.empty((n - 1, m))
        for k in range(n - 1):
            ids = _stencil(k, n, m, k + 0.5)
            self.idx[k] = ids
            self.w[k] = _local_weights(x[ids], x[k], x[k + 1], moment=True)

    def cells(self, g: np.ndarray) -> np.ndarray:
        return np.sum(g[self.idx] * self.w, axis=1)

    def from_top(self, g: np.ndarray) -> np.ndarray:
        """``int_{x_k}^{x_max} g dxi`` at every node."""
        c = self.cells(g)
        out = np.zeros(g.shape, dtype=complex)
        out[:-1] = np.cumsum(c[::-1])[::-1]
        return out


def derivative_matrix_rows(x: np.ndarray, m: int = 5):
    """Stencil indices and weights of ``d/dxi`` at each node (order ``m-1``)."""
    n = x.size
    m = min(m, n)
    idx = np.empty((n, m), dtype=int)
    w = np.empty((n, m))
    for k in range(n):
        ids = _stencil(k, n, m, k)
        idx[k] = ids
        w[k] = _local_weights(x[ids], x[k], x[k], moment=False)
    return idx, w


def d_dt(grid: RayGrid, values: np.ndarray, m: int = 5) -> np.ndarray:
    """Finite-difference ``d/dt`` along the ray (``d/dxi`` divided by ``t``)."""
    idx, w = derivative_matrix_rows(grid.x, m)
    return np.sum(values[idx] * w, axis=1) / grid.nodes


# ---------------------------------------------------------------------------
# tail


def tail_exponents(nu1: complex, e_max: float = TAIL_EXPONENT_MAX) -> list:
    """Exponents ``j + 2 nu1 k`` with real part at most ``e_max``, deduplicated."""
    out = []
    k = 0
    while (2 * nu1 * k).real <= e_max:
        j = 0
        while (j + 2 * nu1 * k).real <= e_max:
            e = j + 2 * nu1 * k
            if all(abs(e - f) > 1e-9 for f in out):
                out.append(complex(e))
            j += 1
        k += 1
    return out


@dataclass(frozen=True)
class TailModel:
    """``R(s) ~ s**(-3-2nu1) * sum_e beta_e (t_max/s)**e`` beyond ``t_max``."""

    exponents: tuple
    beta: tuple

    def integrals(self, grid: RayGrid, nu1: complex):
        """``(int_tmax^oo R ds, int_tmax^oo s**(1+2nu1) R ds)`` along the ray."""
        xm, th = grid.x[-1], grid.theta
        from .domain import cpow_log

        ta = cpow_log(xm, th, -2 - 2 * nu1)
        tb = cpow_log(xm, th, -1.0)
        a = sum(b * ta / (2 + 2 * nu1 + e) for e, b in zip(self.exponents, self.beta))
        bb = sum(b * tb / (1 + e) for e, b in zip(self.exponents, self.beta))
        return a, bb


def fit_tail(grid: RayGrid, nu1: complex, R: np.ndarray, decades: float = TAIL_FIT_DECADES,
             e_max: float = TAIL_EXPONENT_MAX) -> TailModel:
    """Least-squares fit of ``R s**(3+2nu1)`` over the last ``decades`` of the grid."""
    exps = tail_exponents(nu1, e_max)
    sel = grid.x >= grid.x[-1] - decades * math.log(10)
    if sel.sum() < 2 * len(exps):
        sel = np.zeros_like(sel)
        sel[-max(2 * len(exps), grid.n // 2):] = True
    xs = grid.x[sel]
    y = R[sel] * grid.power(3 + 2 * nu1)[sel]
    basis = np.exp(np.outer(grid.x[-1] - xs, np.array(exps)))
    beta, *_ = np.linalg.lstsq(basis, y, rcond=None)
    return TailModel(tuple(exps), tuple(complex(b) for b in beta))


def leading_tail(p: Parameters) -> TailModel:
    return TailModel((0j,), (-leading_ctilde4(p),))


# ---------------------------------------------------------------------------
# the operator


class JOperator:
    """The integral operator on a fixed grid.

    Args:
        p: Parameters (``C != 0``).
        grid: Ray grid.
        tail: ``"fit"`` (multi-term fit of ``R`` near ``t_max``) or
            ``"leading"`` (the ``ctilde4`` limit only).
        rhs: Optional replacement for ``R(t, D1, D2)``, called with
            ``(grid, d1, d2)``; used for quadrature tests.
    """

    def __init__(self, p: Parameters, grid: RayGrid, tail: str = "fit", rhs=None):
        if tail not in ("fit", "leading"):
            raise ValueError("tail must be 'fit' or 'leading'")
        if (1 + 2 * p.nu1).real <= 0:
            raise ValueError("non-integrable tail")
        self.p, self.grid, self.tail, self.rhs = p, grid, tail, rhs
        self.model = SigmaModel.from_grid(p, grid)
        self.quad = CellQuadrature(grid.x)
        n1 = p.nu1
        self.t = grid.nodes
        self.s_pow_b = grid.power(2 + 2 * n1)  # s**(1+2nu1) * ds/dxi
        self.t_m2n = grid.power(-2 * n1)
        self.t_m1m2n = grid.power(-1 - 2 * n1)
        self.last_tail = None

    def R(self, d1, d2):
        if self.rhs is not None:
            return self.rhs(self.grid, d1, d2)
        return self.model.R(d1, d2)

    def integrals(self, R: np.ndarray):
        """``(I_a, I_b)`` at the nodes for given samples of ``R``."""
        ga = R * self.t
        gb = R * self.s_pow_b
        if self.tail == "fit":
            tm = fit_tail(self.grid, self.p.nu1, R)
        else:
            tm = leading_tail(self.p)
        self.last_tail = tm
        ta, tb = tm.integrals(self.grid, self.p.nu1)
        Ia = -(self.quad.from_top(ga) + ta)
        Ib = -(self.quad.from_top(gb) + tb)
        return Ia, Ib

    def __call__(self, d1, d2):
        R = self.R(d1, d2)
        Ia, Ib = self.integrals(R)
        k = 1 / (2 * self.p.nu1 + 1)
        J1 = k * (self.t * Ia - self.t_m2n * Ib)
        J2 = k * (Ia + 2 * self.p.nu1 * self.t_m1m2n * Ib)
        return J1, J2


def apply_J(p: Parameters, sol: RemainderSolution, tail: str = "fit", rhs=None) -> RemainderSolution:
    """One application of the operator to ``(sol.delta1, sol.delta2)``."""
    if p.C == 0 and rhs is None:
        raise ValueError("C = 0: the remainder vanishes identically")
    J = JOperator(p, sol.grid, tail=tail, rhs=rhs)
    j1, j2 = J(sol.delta1, sol.delta2)
    return RemainderSolution(sol.grid, j1, j2, final_norm=weighted_norm_arrays(sol.grid, p.nu1, j1, j2))


# ---------------------------------------------------------------------------
# solver


def _iterate(J: JOperator, d1, d2, tol: float, max_iter: int):
    nu1 = J.p.nu1
    grid = J.grid
    increments = []
    for it in range(1, max_iter + 1):
        n1, n2 = J(d1, d2)
        inc = weighted_norm_arrays(grid, nu1, n1 - d1, n2 - d2)
        increments.append(inc)
        d1, d2 = n1, n2
        if inc < tol:
            return d1, d2, it, increments, True
        norm = weighted_norm_arrays(grid, nu1, d1, d2)
        noise = 100 * np.finfo(float).eps * max(norm, 1.0)
        if it >= 3 and inc > increments[-2] and inc > noise:
            raise NonContractionError(
                f"increments grew from {increments[-2]:.3g} to {inc:.3g}: increase ρ")
        if not np.isfinite(inc):
            raise NonContractionError("iteration diverged: increase ρ")
    return d1, d2, max_iter, increments, False


def sigma_residual_samples(p: Parameters, sol: RemainderSolution, stride: int = 1, dps: int = 50):
    """Sigma-form residual moduli and term scales of the composed ``u``.

    ``D''`` is obtained by differentiating the ``D'`` samples numerically, so
    the check does not reuse the quadratic's root.  Returns ``(t, res, scale)``.
    """
    dd2 = d_dt(sol.grid, sol.delta2, m=RESIDUAL_STENCIL)
    ids = np.arange(0, sol.grid.n, stride)
    res = np.empty(ids.size)
    scale = np.empty(ids.size)
    for j, k in enumerate(ids):
        res[j], scale[j] = sigma_residual_mp(p, sol.grid.nodes[k], sol.grid.theta,
                                             sol.delta1[k], sol.delta2[k], dd2[k], dps=dps)
    return sol.grid.nodes[ids], res, scale


def sigma_residual_profile(p: Parameters, sol: RemainderSolution, stride: int = 1, dps: int = 50):
    """Relative sigma-form residual at the nodes, as ``(t, ratio)``."""
    t, res, scale = sigma_residual_samples(p, sol, stride, dps)
    return t, np.where(scale > 0, res / np.where(scale > 0, scale, 1), res)


def picard_solve(p: Parameters, grid: RayGrid, tol: float = 1e-12, max_iter: int = 50,
                 init: tuple | None = None, tail: str = "fit", escalate: bool = True,
                 residual_stride: int | None = 1) -> RemainderSolution:
    """Fixed point of the operator by Picard iteration from ``init`` (default 0).

    Raises:
        NonContractionError: if increments grow, after one retry at ``4*rho``
            when ``escalate`` is set.
    """
    if grid.n < MIN_SOLVER_NODES:
        raise ValueError(f"solver needs at least {MIN_SOLVER_NODES} nodes")
    zero = np.zeros(grid.n, dtype=complex)
    if p.C == 0:
        sol = RemainderSolution(grid, zero, zero.copy(), 0, [], True, 0.0,
                                {"trivial": True}, "C = 0: exact solution")
        return sol
    d1, d2 = (zero, zero.copy()) if init is None else (np.asarray(init[0], complex), np.asarray(init[1], complex))
    J = JOperator(p, grid, tail=tail)
    try:
        d1, d2, its, incs, ok = _iterate(J, d1, d2, tol, max_iter)
    except (NonContractionError, RegimeError) as exc:
        if not escalate:
            raise NonContractionError(str(exc)) from exc
        bigger = _escalated(grid)
        sol = picard_solve(p, bigger, tol, max_iter, None, tail, False, residual_stride)
        sol.certificates["escalated_from_rho"] = grid.rho
        sol.message = f"escalated to rho={bigger.rho:g} after: {exc}"
        return sol
    sol = RemainderSolution(grid, d1, d2, its, incs, ok, weighted_norm_arrays(grid, p.nu1, d1, d2))
    j1, j2 = J(d1, d2)
    sol.certificates["fixed_point_residual"] = weighted_norm_arrays(grid, p.nu1, j1 - d1, j2 - d2)
    if residual_stride:
        _, ratios = sigma_residual_profile(p, sol, stride=residual_stride)
        sol.certificates["sigma_residual_max"] = float(np.max(ratios))
    sol.message = "converged" if ok else "max_iter exhausted"
    return sol


def _escalated(grid: RayGrid) -> RayGrid:
    rho = 4 * grid.rho
    sector = replace(grid.sector, rho=rho)
    return make_ray_grid(sector, grid.theta, grid.t_max * 4, grid.n, grid.grading)


def default_grid(rho: float = 50.0, theta: float = 0.0, t_max: float | None = None,
                 n: int = 4096, grading: str = "geometric") -> RayGrid:
    return make_ray_grid(Sector.around(theta, rho), theta, t_max or 1e4 * rho, n, grading)
