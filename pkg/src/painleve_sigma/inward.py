"""Inward integration of the remainder equation along a ray.

The second-order equation ``D'' = F(t, D, D')`` is integrated in
``xi = log|t|`` with the scaled unknowns::

    w1 = t**(1+2 nu1) D,   w2 = t**(2+2 nu1) D'
    dw1/dxi = (1+2 nu1) w1 + w2
    dw2/dxi = (2+2 nu1) w2 + t**(3+2 nu1) F

which stay of order one along the asymptotic family.  The integrator is
scipy's DOP853 with dense output.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from .asymptotics import RemainderSeries
from .domain import Parameters, RayGrid, Sector, cpow_log, make_ray_grid
from .picard import RemainderSolution, weighted_norm_arrays
from .sigma import SigmaModel


class IntegrationError(RuntimeError):
    """The integrator could not reach the end point."""


def _rhs_factory(p: Parameters, theta: float, rhs):
    n1 = p.nu1
    a1, a2, a3 = 1 + 2 * n1, 2 + 2 * n1, 3 + 2 * n1

    if rhs is None:
        def F(xi, d1, d2):
            m = SigmaModel(p, np.array([xi]), theta)
            return m.F(np.array([d1]), np.array([d2]))[0]
    elif rhs == "zero":
        def F(xi, d1, d2):
            return 0j
    elif rhs == "homogeneous":
        def F(xi, d1, d2):
            t = np.exp(xi + 1j * theta)
            return -2 * n1 * d2 / t + 2 * n1 * d1 / t ** 2
    else:
        F = rhs

    def f(xi, w):
        d1 = w[0] * cpow_log(xi, theta, -a1)
        d2 = w[1] * cpow_log(xi, theta, -a2)
        return np.array([a1 * w[0] + w[1], a2 * w[1] + cpow_log(xi, theta, a3) * F(xi, d1, d2)])

    return f


def integrate_inward(p: Parameters, t_start: complex, t_end: complex, init=None,
                     tol: float = 1e-12, grid: RayGrid | None = None, rhs=None,
                     n: int = 512) -> RemainderSolution:
    """Integrate from ``t_start`` inward to ``t_end`` on one ray.

    Args:
        p: Parameters.
        t_start: Outer point; its argument fixes the ray and branch.
        t_end: Inner point on the same ray.
        init: ``(D, D')`` at ``t_start``; ``"series"`` (default) takes them
            from the asymptotic series, ``(0, 0)`` drops the remainder there.
        tol: Relative local error tolerance.
        grid: Nodes at which to sample; the part inside ``[|t_end|, |t_start|]``
            is used.  Defaults to a geometric grid of ``n`` nodes.
        rhs: ``None`` for the true ``F``; ``"zero"``, ``"homogeneous"`` or a
            callable ``F(xi, D, D')`` for synthetic checks.

    Raises:
        IntegrationError: on step-size collapse, with the last ``t`` reached.
    """
    theta = float(np.angle(t_start))
    if not np.isclose(np.angle(t_end), theta, atol=1e-12) and abs(t_end) > 0:
        raise ValueError("t_start and t_end must lie on the same ray")
    if grid is not None:
        theta = grid.theta
    r0, r1 = abs(t_end), abs(t_start)
    if not r1 > r0:
        raise ValueError("integration runs inward: |t_start| must exceed |t_end|")
    x0 = float(np.log(r1))
    if init is None or (isinstance(init, str) and init == "series"):
        if rhs is not None or p.C == 0:
            init = (0j, 0j)
        else:
            init = RemainderSeries(p)(x0, theta)
    d1, d2 = complex(init[0]), complex(init[1])
    w0 = np.array([d1 * cpow_log(x0, theta, 1 + 2 * p.nu1), d2 * cpow_log(x0, theta, 2 + 2 * p.nu1)])

    if grid is None:
        grid = make_ray_grid(Sector.around(theta, max(r0, 1 + 1e-9)), theta, r1, n)
    keep = (grid.moduli >= r0 * (1 - 1e-14)) & (grid.moduli <= r1 * (1 + 1e-14))
    sub = grid.restrict(keep)

    if p.C == 0 and rhs is None:
        w = np.zeros((2, sub.n), dtype=complex)
        status, message = 0, "C = 0: exact solution"
    else:
        f = _rhs_factory(p, theta, rhs)
        res = solve_ivp(f, (x0, float(np.log(r0))), w0, method="DOP853", rtol=tol,
                        atol=1e-200, dense_output=True)
        if res.status != 0:
            last = np.exp(res.t[-1] + 1j * theta) if res.t.size else t_start
            raise IntegrationError(f"{res.message} (last good t = {last:.6g})")
        w = res.sol(sub.x)
        status, message = res.status, res.message
    d1s = w[0] * sub.power(-(1 + 2 * p.nu1))
    d2s = w[1] * sub.power(-(2 + 2 * p.nu1))
    sol = RemainderSolution(sub, d1s, d2s, converged=status == 0,
                            final_norm=weighted_norm_arrays(sub, p.nu1, d1s, d2s),
                            message=str(message))
    return sol
