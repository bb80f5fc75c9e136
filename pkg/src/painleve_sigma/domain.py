"""Parameters, sectors, ray grids and complex powers on a pinned branch."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

GRADINGS = ("geometric", "uniform")
MIN_GRID_NODES = 2


class DomainError(ValueError):
    """Invalid parameters, sector or grid request."""


def _as_complex(z) -> complex:
    if isinstance(z, (list, tuple)):
        if len(z) != 2:
            raise DomainError(f"expected [re, im], got {z!r}")
        return complex(float(z[0]), float(z[1]))
    return complex(z)


@dataclass(frozen=True)
class Parameters:
    """Equation constants ``nu1, nu3, nu4`` and the free constant ``C``."""

    nu1: complex
    nu3: complex
    nu4: complex
    C: complex

    def __post_init__(self):
        for name in ("nu1", "nu3", "nu4", "C"):
            val = _as_complex(getattr(self, name))
            if not (math.isfinite(val.real) and math.isfinite(val.imag)):
                raise DomainError(f"{name} must be finite")
            object.__setattr__(self, name, val)
        if not self.nu1.real > 0:
            raise DomainError("Re(ν₁) must be positive")
        if 2 * self.nu1 + 1 == 0:  # unreachable for Re(nu1) > 0, kept as a guard
            raise DomainError("2ν₁ + 1 must be non-zero")

    def to_dict(self) -> dict:
        return {k: [getattr(self, k).real, getattr(self, k).imag] for k in ("nu1", "nu3", "nu4", "C")}

    @classmethod
    def from_dict(cls, data: dict) -> "Parameters":
        try:
            return cls(*(_as_complex(data[k]) for k in ("nu1", "nu3", "nu4", "C")))
        except KeyError as exc:
            raise DomainError(f"missing parameter {exc.args[0]!r}") from None

    def with_C(self, C: complex) -> "Parameters":
        return Parameters(self.nu1, self.nu3, self.nu4, C)


def make_parameters(nu1, nu3, nu4, C) -> Parameters:
    """Validated :class:`Parameters`; raises :class:`DomainError` if ``Re(nu1) <= 0``."""
    return Parameters(nu1, nu3, nu4, C)


@dataclass(frozen=True)
class Sector:
    """``{|t| > rho, angle_lo < arg t < angle_hi}`` with opening below ``2*pi``."""

    angle_lo: float
    angle_hi: float
    rho: float

    def __post_init__(self):
        if not self.angle_lo < self.angle_hi < self.angle_lo + 2 * math.pi:
            raise DomainError("sector needs angle_lo < angle_hi < angle_lo + 2π")
        if not self.rho > 1:
            raise DomainError("sector inner radius rho must exceed 1")

    def contains_angle(self, theta: float) -> bool:
        return self.angle_lo <= theta <= self.angle_hi

    @classmethod
    def around(cls, theta: float, rho: float, half_width: float = math.pi / 2) -> "Sector":
        return cls(theta - half_width, theta + half_width, rho)


@dataclass(frozen=True, eq=False)
class RayGrid:
    """Nodes on the ray ``arg t = theta`` with ``|t|`` increasing from ``rho``.

    Attributes:
        theta: Ray angle; it is also the branch of ``arg t`` used throughout.
        moduli: ``|t|`` at the nodes, strictly increasing.
        sector: The sector the ray lies in.
        grading: How the moduli were laid out.
        x: ``log|t|`` at the nodes.
        nodes: The complex nodes.
    """

    theta: float
    moduli: np.ndarray
    sector: Sector
    grading: str = "geometric"
    x: np.ndarray = field(init=False, repr=False)
    nodes: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        r = np.array(self.moduli, dtype=float)
        if r.ndim != 1 or r.size < MIN_GRID_NODES or np.any(np.diff(r) <= 0) or r[0] <= 0:
            raise DomainError("grid moduli must be positive and strictly increasing, at least two nodes")
        if not self.sector.contains_angle(self.theta):
            raise DomainError("ray angle lies outside the sector")
        x = np.log(r)
        nodes = r * np.exp(1j * self.theta)
        for a in (r, x, nodes):
            a.setflags(write=False)
        object.__setattr__(self, "moduli", r)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "nodes", nodes)

    @property
    def n(self) -> int:
        return self.moduli.size

    @property
    def rho(self) -> float:
        return float(self.moduli[0])

    @property
    def t_max(self) -> float:
        return float(self.moduli[-1])

    def power(self, p: complex) -> np.ndarray:
        """``t**p`` at every node on this grid's branch."""
        return cpow_log(self.x, self.theta, p)

    def power_modulus(self, alpha: complex) -> np.ndarray:
        """``|t**alpha|`` on the branch, i.e. ``|t|**Re(alpha) * exp(-Im(alpha)*theta)``."""
        alpha = complex(alpha)
        return np.exp(alpha.real * self.x - alpha.imag * self.theta)

    def restrict(self, mask) -> "RayGrid":
        return RayGrid(self.theta, self.moduli[mask], self.sector, self.grading)

    def to_dict(self) -> dict:
        return {"rho": self.rho, "theta": self.theta, "t_max": self.t_max,
                "n": self.n, "grading": self.grading}


def make_ray_grid(sector: Sector, theta: float, t_max: float, n: int,
                  grading: str = "geometric") -> RayGrid:
    """Grid of ``n`` nodes from ``sector.rho`` to ``t_max`` on the ray ``theta``.

    Geometric grading is uniform in ``log|t|``; uniform grading is uniform in
    ``|t|``.  End points are exact.
    """
    if grading not in GRADINGS:
        raise DomainError(f"grading must be one of {GRADINGS}")
    if not t_max > sector.rho:
        raise DomainError("t_max must exceed rho (degenerate interval)")
    if int(n) != n or n < MIN_GRID_NODES:
        raise DomainError(f"need at least {MIN_GRID_NODES} grid nodes")
    n = int(n)
    rho = float(sector.rho)
    if grading == "geometric":
        r = rho * np.exp(math.log(t_max / rho) * np.arange(n) / (n - 1))
    else:
        r = np.linspace(rho, t_max, n)
    r[0], r[-1] = rho, t_max
    return RayGrid(float(theta), r, sector, grading)


# ---------------------------------------------------------------------------
# complex powers

_SPLIT = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _split(a):
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def _dd_dot(a, b, c, d):
    """``a*b + c*d`` as an unevaluated double-double sum ``hi + lo``."""
    p, pe = _two_prod(a, b)
    q, qe = _two_prod(c, d)
    s, se = _two_sum(p, q)
    return _two_sum(s, se + pe + qe)


def cpow_log(x, theta, p: complex):
    """``exp(p * (x + i*theta))`` with the exponent formed in double-double.

    Args:
        x: ``log|t|`` (scalar or array).
        theta: Branch value of ``arg t``.
        p: Complex exponent.

    The product ``p*log t`` is carried to twice working precision so that
    ``t**(p+q) == t**p * t**q`` holds to a few ulps even for large ``|log t|``.
    """
    p = complex(p)
    x = np.asarray(x, dtype=float)
    th = np.full_like(x, float(theta))
    a_hi, a_lo = _dd_dot(p.real, x, -p.imag, th)
    b_hi, b_lo = _dd_dot(p.real, th, p.imag, x)
    e = np.exp(a_hi)
    mag = e + e * a_lo
    c, s = np.cos(b_hi), np.sin(b_hi)
    out = mag * ((c - s * b_lo) + 1j * (s + c * b_lo))
    return out if out.ndim else complex(out)


def cpow(t, p: complex, theta: float | None = None):
    """``t**p`` with ``arg t`` pinned to ``theta``.

    ``theta`` defaults to the principal argument.  When given, it must agree
    with the direction of ``t`` modulo ``2*pi``; it selects the sheet.
    """
    t = np.asarray(t, dtype=complex)
    if np.any(t == 0):
        raise DomainError("cpow needs t != 0")
    if theta is None:
        theta_arr = np.angle(t)
        if theta_arr.ndim == 0:
            return cpow_log(np.log(np.abs(t)), float(theta_arr), p)
        return np.array([cpow_log(np.log(abs(ti)), float(a), p) for ti, a in zip(t, theta_arr)])
    return cpow_log(np.log(np.abs(t)), theta, p)


def cpow_mp(t, p, theta: float | None = None, dps: int = 50):
    """Reference ``t**p`` in ``dps``-digit arithmetic on the same branch."""
    with mpmath.workdps(dps):
        t = mpmath.mpc(t)
        arg = mpmath.arg(t) if theta is None else mpmath.mpf(theta)
        return mpmath.exp(mpmath.mpc(p) * (mpmath.log(abs(t)) + 1j * arg))
