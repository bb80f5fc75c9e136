"""Formal large-``t`` series of the remainder.

The remainder is expanded as a double series in ``x = 1/t`` and
``y = t**(-2 nu1)``::

    D = sum_{a, b} A[a, b] x**a y**b

and computed by fixed-point iteration of ``D = L^{-1} R(D)`` in truncated
series arithmetic, where ``L[phi] = phi'' + 2 nu1 phi'/t - 2 nu1 phi/t**2``.
Each series carries the box ``a <= vx, b <= vy`` on which its coefficients
are exact; the box shrinks where an operation divides by ``x`` or ``y``.

The result seeds the inward ODE integration far out on a ray.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .domain import Parameters, cpow_log
from .sigma import CompiledPoly, _fixture


@dataclass
class Series:
    """Truncated double series with a validity box ``(vx, vy)``."""

    c: np.ndarray
    vx: int
    vy: int

    @property
    def shape(self):
        return self.c.shape

    @classmethod
    def zero(cls, shape) -> "Series":
        return cls(np.zeros(shape, dtype=complex), shape[0] - 1, shape[1] - 1)

    @classmethod
    def monomial(cls, shape, a: int, b: int, coef: complex = 1.0) -> "Series":
        s = cls.zero(shape)
        if a < shape[0] and b < shape[1]:
            s.c[a, b] = coef
        return s

    def _box(self, other):
        return min(self.vx, other.vx), min(self.vy, other.vy)

    def __add__(self, other):
        if not isinstance(other, Series):
            out = self.c.copy()
            out[0, 0] += other
            return Series(out, self.vx, self.vy)
        return Series(self.c + other.c, *self._box(other))

    __radd__ = __add__

    def __neg__(self):
        return Series(-self.c, self.vx, self.vy)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Series):
            return Series(self.c * other, self.vx, self.vy)
        A, B = self.shape
        out = np.zeros_like(self.c)
        for i, j in zip(*np.nonzero(other.c)):
            out[i:, j:] += other.c[i, j] * self.c[:A - i, :B - j]
        # products are exact up to the smaller box of the factors' orders
        lo_s, lo_o = self.low(), other.low()
        vx = min(self.vx + lo_o[0], other.vx + lo_s[0], A - 1)
        vy = min(self.vy + lo_o[1], other.vy + lo_s[1], B - 1)
        return Series(out, vx, vy)

    __rmul__ = __mul__

    def low(self):
        """Smallest exponents present (each coordinate separately)."""
        nz = np.nonzero(self.c)
        if not nz[0].size:
            return self.shape[0], self.shape[1]
        return int(nz[0].min()), int(nz[1].min())

    def shift(self, da: int, db: int) -> "Series":
        """Multiply by ``x**da y**db`` (negative values divide)."""
        A, B = self.shape
        out = np.zeros_like(self.c)
        src = self.c
        if da < 0 or db < 0:
            dropped = src[:max(-da, 0), :].any() or src[:, :max(-db, 0)].any()
            if dropped:
                raise ArithmeticError("division by a monomial that does not divide the series")
        ia, ib = max(da, 0), max(db, 0)
        sa, sb = max(-da, 0), max(-db, 0)
        na, nb = A - ia - sa, B - ib - sb
        out[ia:ia + na, ib:ib + nb] = src[sa:sa + na, sb:sb + nb]
        return Series(out, min(self.vx + da, A - 1), min(self.vy + db, B - 1))

    def inverse(self) -> "Series":
        c0 = self.c[0, 0]
        if c0 == 0:
            raise ZeroDivisionError("series without constant term")
        e = self * (1 / c0) - 1.0
        out = Series.monomial(self.shape, 0, 0)
        term = out
        for _ in range(sum(self.shape)):
            term = term * (-e)
            out = out + term
        return out * (1 / c0)

    def sqrt1m(self) -> "Series":
        """``sqrt(1 - s)`` for ``s`` without constant term."""
        if self.c[0, 0] != 0:
            raise ValueError("argument must vanish at the origin")
        out = Series.monomial(self.shape, 0, 0)
        term = out
        for n in range(1, sum(self.shape) + 1):
            term = term * (-self)
            coef = _binom_half(n)
            out = out + term * coef
        return out

    def evaluate(self, x, y):
        """Sum over the valid box at given ``x, y``."""
        total = 0
        for b in range(self.vy, -1, -1):
            row = 0
            for a in range(self.vx, -1, -1):
                row = row * x + self.c[a, b]
            total = total * y + row
        return total


def _binom_half(n: int) -> float:
    out = 1.0
    for k in range(n):
        out *= (0.5 - k) / (k + 1)
    return out


class RemainderSeries:
    """Asymptotic series of the remainder for given parameters.

    Args:
        p: Parameters.
        order_x: Largest power of ``1/t`` carried.
        order_y: Largest power of ``t**(-2 nu1)`` carried.
    """

    def __init__(self, p: Parameters, order_x: int = 14, order_y: int = 6, iterations: int | None = None):
        if p.C == 0:
            raise ValueError("C = 0 has the trivial remainder")
        self.p = p
        self.shape = (order_x + 1, order_y + 1)
        self._T = [self._series_of(CompiledPoly(_fixture(n), p)) for n in ("T0", "T1", "T2")]
        self.delta = self._solve(iterations or 2 * (order_x + order_y))

    def _series_of(self, cp: CompiledPoly) -> dict:
        """Each ``(e_D, e_Dp)`` group of a compiled fixture as a Series."""
        A, B = self.shape
        inv1mx = Series.zero(self.shape)
        for n in range(A):
            inv1mx.c[n, 0] = comb(cp.d + n - 1, n) if cp.d else (1.0 if n == 0 else 0.0)
        out = {}
        for key, items in cp.groups.items():
            s = Series.zero(self.shape)
            for (a, b), coef in items:
                if a > 0 or b > 0:
                    raise ValueError("fixture term grows at infinity")
                if -a < A and -b < B:
                    s.c[-a, -b] += coef
            out[key] = s * inv1mx
        return out

    def _eval(self, groups: dict, d1: Series, d2: Series) -> Series:
        total = Series.zero(self.shape)
        for (i, j), g in groups.items():
            term = g
            for _ in range(i):
                term = term * d1
            for _ in range(j):
                term = term * d2
            total = total + term
        return total

    def derivative(self, s: Series) -> Series:
        """``d/dt`` of ``x**a y**b`` is ``-(a + 2 nu1 b) x**(a+1) y**b``."""
        A, B = self.shape
        out = Series.zero(self.shape)
        a = np.arange(A)[:, None]
        b = np.arange(B)[None, :]
        q = -(a + 2 * self.p.nu1 * b) * s.c
        out.c[1:, :] = q[:-1, :]
        return Series(out.c, min(s.vx + 1, A - 1), s.vy)

    def L_inverse(self, r: Series) -> Series:
        """Particular solution of ``L[phi] = r`` with no homogeneous part."""
        lo = r.low()
        if lo[0] < 3 and r.c[:3, :].any():
            raise ArithmeticError("right side not small enough to invert L")
        A, B = self.shape
        out = Series.zero(self.shape)
        n1 = self.p.nu1
        for a in range(2, A):
            for b in range(B):
                if r.c[a, b] == 0:
                    continue
                q = a + 2 * n1 * b
                out.c[a - 2, b] = r.c[a, b] / ((q - 1) * (q - 2 - 2 * n1))
        return Series(out.c, r.vx - 2, r.vy)

    def rhs(self, d1: Series) -> Series:
        d2 = self.derivative(d1)
        T0 = self._eval(self._T[0], d1, d2)
        T1 = self._eval(self._T[1], d1, d2)
        T2 = self._eval(self._T[2], d1, d2)
        beta = T1.shift(-2, -1)  # T1 = x**2 y beta
        ib = beta.inverse()
        q = T0.shift(-2, -1) * ib  # T0/T1
        ratio = (q * T2 * ib).shift(-2, -1) * 4.0  # 4 T0 T2 / T1**2
        F = -2.0 * q * (1.0 + ratio.sqrt1m()).inverse()
        n1 = self.p.nu1
        return F + d2.shift(1, 0) * (2 * n1) - d1.shift(2, 0) * (2 * n1)

    def _solve(self, iterations: int) -> Series:
        d1 = Series.zero(self.shape)
        prev = None
        for _ in range(iterations):
            d1 = self.L_inverse(self.rhs(d1))
            if prev is not None and np.allclose(d1.c, prev, rtol=0, atol=0):
                break
            prev = d1.c.copy()
        return d1

    @property
    def box(self):
        return self.delta.vx, self.delta.vy

    def __call__(self, x_log, theta):
        """``(D, D')`` at ``t = exp(x_log + i theta)``."""
        xv = np.exp(-x_log) * np.exp(-1j * theta)
        yv = cpow_log(x_log, theta, -2 * self.p.nu1)
        d1 = self.delta.evaluate(xv, yv)
        d2 = self.derivative(self.delta).evaluate(xv, yv)
        return d1, d2

    def leading(self) -> complex:
        """Coefficient of ``x y``, i.e. ``D ~ A[1,1] t**(-1-2 nu1)``."""
        return complex(self.delta.c[1, 1])
