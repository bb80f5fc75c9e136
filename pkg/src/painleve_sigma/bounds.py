"""Bound functions for the ball-mapping and contraction estimates, and
empirical certificates measured on an actual run.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .domain import Parameters, RayGrid
from .picard import JOperator, RemainderSolution, weighted_norm_arrays
from .sigma import SigmaModel


class PoleError(ValueError):
    """``M |t|**(-2-2 Re nu1) >= 1``: a ``(1 - .)**-k`` factor has a pole."""


def _small(M: float, t_abs: float, nu1: complex) -> float:
    return M * t_abs ** (-2 - 2 * complex(nu1).real)


def eval_Phi(M: float, t_abs: float, nu1: complex) -> float:
    """The growth function ``Phi(M, t)`` of the bound ``|R| <= K|t|**(-3-2nu1)(1 + Phi/t)``.

    Complex powers of ``t`` enter through their modulus with ``Re(nu1)``.
    """
    e = _small(M, t_abs, nu1)
    if e >= 1:
        raise PoleError(f"factor (1 - M|t|^(-2-2Re nu1))^-1 has a pole: M|t|^(-2-2Re nu1) = {e:.6g}")
    re = complex(nu1).real
    first = M + M ** 2 * (1 + e + e ** 2) / (1 - e)
    bracket = 1 + M + M ** 2 / t_abs + (M ** 3 + M ** 4) * t_abs ** (-3 - 2 * re)
    second = bracket ** 2 * (1 + e) / (1 - e) ** 3
    return first + second


def eval_A_B(M: float, t_abs: float, nu1: complex) -> tuple:
    """``A(M, t)`` bounding ``Q`` and ``B(M, t)`` bounding the cubic quotient in ``tau``."""
    re = complex(nu1).real
    w = t_abs ** (-2 * re)  # |T**-2|
    A = 1 + M + M ** 2 / t_abs + (M ** 3 + M ** 4) * w / t_abs ** 3
    e = M * w / t_abs ** 2
    if e >= 1:
        raise PoleError(f"factor (1 - M|T^-2|t^-2)^-3 has a pole: M|T^-2|t^-2 = {e:.6g}")
    B = (1 + e) / (1 - e) ** 3
    return A, B


# ---------------------------------------------------------------------------
# random ball elements


def random_profile(rng: np.random.Generator, grid: RayGrid, degree: int = 3) -> np.ndarray:
    """Smooth random ``xi(t) = sum_k c_k (rho/t)**k`` with ``sup |xi|`` in ``[1/4, 1]``."""
    c = rng.standard_normal(degree + 1) + 1j * rng.standard_normal(degree + 1)
    z = grid.rho / grid.nodes
    xi = np.polyval(c[::-1], z)
    return xi / np.max(np.abs(xi)) * rng.uniform(0.25, 1.0)


def random_ball_element(rng: np.random.Generator, grid: RayGrid, nu1: complex, M: float):
    """``(D1, D2)`` with ``D1 = M xi1 t**(-1-2nu1)``, ``D2 = M xi2 t**(-2-2nu1)``.

    ``xi1`` and ``xi2`` are drawn independently; ``D2`` need not be ``D1'``.
    """
    d1 = M * random_profile(rng, grid) * grid.power(-1 - 2 * nu1)
    d2 = M * random_profile(rng, grid) * grid.power(-2 - 2 * nu1)
    return d1, d2


@dataclass
class BallCertificate:
    """Fitted constants and measured contraction for one run.

    Attributes:
        M: Ball radius, twice the fitted ``Kprime_fit``.
        rho: Inner radius of the run.
        K_fit: Fitted constant in ``|R| <= K |t|**(-3-2nu1) (1 + Phi/rho)``.
        Kprime_fit: Fitted constant from ``||J(0)|| <= K' (1 + Phi(0, rho)/rho)``.
        phi_value: ``Phi(M, rho)``.
        A_value: ``A(M, rho)``.
        B_value: ``B(M, rho)``.
        ball_mapped: ``Kprime_fit (1 + phi_value/rho) <= M``.
        contraction_ratio: Largest measured ``||J(a) - J(b)|| / ||a - b||``.
        ball_mapped_empirical: ``||J(D)|| <= M`` on every sampled element.
        sample_ratios: Per-pair contraction ratios.
    """

    M: float
    rho: float
    K_fit: float
    Kprime_fit: float
    phi_value: float
    A_value: float
    B_value: float
    ball_mapped: bool
    contraction_ratio: float
    ball_mapped_empirical: bool = True
    samples: int = 0
    seed: int | None = None
    sample_ratios: list = field(default_factory=list)
    sample_image_norms: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.contraction_ratio < 1 and self.ball_mapped_empirical

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def certify(p: Parameters, run: RemainderSolution, samples: int = 32, seed: int = 0,
            tail: str = "fit") -> BallCertificate:
    """Empirical ball-mapping and contraction certificate for a converged run."""
    grid = run.grid
    rho = grid.rho
    if p.C == 0:
        return BallCertificate(0.0, rho, 0.0, 0.0, eval_Phi(0.0, rho, p.nu1), 1.0, 1.0,
                               True, 0.0, True, 0, seed)
    rng = np.random.default_rng(seed)
    J = JOperator(p, grid, tail=tail)
    zero = np.zeros(grid.n, dtype=complex)
    j1, j2 = J(zero, zero)
    j0 = weighted_norm_arrays(grid, p.nu1, j1, j2)
    Kp = j0 / (1 + eval_Phi(0.0, rho, p.nu1) / rho)
    M = 2 * Kp
    phi = eval_Phi(M, rho, p.nu1)
    A, B = eval_A_B(M, rho, p.nu1)

    # K from |R(D)| |t|**(3+2nu1) over the sampled elements
    weight = grid.power_modulus(3 + 2 * p.nu1)
    K = float(np.max(np.abs(J.R(zero, zero)) * weight))
    ratios, images = [], []
    mapped = True
    for _ in range(samples):
        a = random_ball_element(rng, grid, p.nu1, M)
        b = random_ball_element(rng, grid, p.nu1, M)
        ja, jb = J(*a), J(*b)
        K = max(K, float(np.max(np.abs(J.R(*a)) * weight)) / (1 + phi / rho))
        num = weighted_norm_arrays(grid, p.nu1, ja[0] - jb[0], ja[1] - jb[1])
        den = weighted_norm_arrays(grid, p.nu1, a[0] - b[0], a[1] - b[1])
        ratios.append(num / den)
        for img in (ja, jb):
            nrm = weighted_norm_arrays(grid, p.nu1, *img)
            images.append(nrm)
            mapped = mapped and nrm <= M
    return BallCertificate(
        M=M, rho=rho, K_fit=K, Kprime_fit=Kp, phi_value=phi, A_value=A, B_value=B,
        ball_mapped=bool(Kp * (1 + phi / rho) <= M), contraction_ratio=float(max(ratios)),
        ball_mapped_empirical=bool(mapped), samples=samples, seed=seed,
        sample_ratios=[float(r) for r in ratios], sample_image_norms=[float(v) for v in images])


# ---------------------------------------------------------------------------
# Lipschitz profiles of the pieces of R


def lipschitz_profile(p: Parameters, grid: RayGrid, M: float, pairs: int = 8, seed: int = 0,
                      pieces=("Rt2", "tau")) -> dict:
    """Largest ``|piece(a) - piece(b)| / ||a - b||`` per node over random pairs."""
    rng = np.random.default_rng(seed)
    model = SigmaModel.from_grid(p, grid)
    out = {k: np.zeros(grid.n) for k in pieces}
    for _ in range(pairs):
        a = random_ball_element(rng, grid, p.nu1, M)
        b = random_ball_element(rng, grid, p.nu1, M)
        pa, pb = model.R_pieces(*a), model.R_pieces(*b)
        dn = weighted_norm_arrays(grid, p.nu1, a[0] - b[0], a[1] - b[1])
        for k in pieces:
            out[k] = np.maximum(out[k], np.abs(pa[k] - pb[k]) / dn)
    return out


def loglog_slope(t_abs: np.ndarray, values: np.ndarray, lo: float, hi: float) -> float:
    """Least-squares slope of ``log values`` against ``log t_abs`` on ``[lo, hi]``."""
    sel = (t_abs >= lo) & (t_abs <= hi) & (values > 0)
    if sel.sum() < 2:
        raise ValueError("fewer than two points in the fitting window")
    slope, _ = np.polyfit(np.log(t_abs[sel]), np.log(values[sel]), 1)
    return float(slope)


def expected_lipschitz_slope(nu1: complex) -> float:
    return -(4 + 2 * complex(nu1).real)


def contraction_scaling(ratios: dict) -> float:
    """Spread of ``ratio * rho`` across runs (max over min)."""
    vals = [r * rho for rho, r in ratios.items()]
    return max(vals) / min(vals) if min(vals) > 0 else math.inf
