"""Numeric evaluation of the sigma-form equation and of the remainder equation.

The quadratic ``T2*D''**2 + T1*D'' + T0 = 0`` satisfied by the remainder is
evaluated from engine-derived monomial fixtures.  Its root ``F`` is taken in
the subtraction-free form ``-2*T0/T1 / (1 + sqrt(1 - 4*T0*T2/T1**2))``.

Powers of ``t`` with complex exponent always use the branch ``arg t = theta``
supplied by the caller (the ray angle).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import mpmath
import numpy as np

from .algebra.diffpoly import IC, ID, IDP, IDPP, IN1, IN3, IN4, IT, IT_CAP, DiffPoly
from .algebra.fixtures import load_derived
from .domain import Parameters, cpow_log

WARN_RATIO = 0.5
MAX_RATIO = 1.0
TABLE_NAMES = ("a1", "b1", "a2", "c0", "c1", "c2",
               "d1", "d2", "d3", "q1", "q2", "q3", "q4", "q5", "q6")
# (e_D, e_Dp) and the power of t dividing each P slot of T0
P_SLOTS = {"d1": ((2, 1), 4), "d2": ((1, 1), 3), "d3": ((2, 0), 4),
           "q1": ((0, 2), 2), "q2": ((1, 2), 3), "q3": ((2, 2), 4),
           "q4": ((0, 3), 2), "q5": ((1, 3), 3), "q6": ((0, 4), 2)}


class SigmaError(ArithmeticError):
    """Base class for evaluation failures."""


class RegimeError(SigmaError):
    """Discriminant ratio too large for the root selection."""


class DegenerateError(SigmaError):
    """``C = 0``: the quadratic degenerates and the exact solution applies."""


class DiscriminantWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class StatePoint:
    """A point ``t`` with remainder values ``delta1 = D`` and ``delta2 = D'``.

    ``theta`` is the branch of ``arg t``; it defaults to the principal value.
    """

    t: complex
    delta1: complex = 0j
    delta2: complex = 0j
    theta: float | None = None

    @property
    def branch(self) -> float:
        return float(np.angle(self.t)) if self.theta is None else float(self.theta)

    @property
    def logt(self) -> tuple:
        return float(np.log(abs(self.t))), self.branch

    def s1(self, p: Parameters) -> complex:
        return cpow_log(*self.logt, 2 * p.nu1) * self.delta1

    def s2(self, p: Parameters) -> complex:
        return cpow_log(*self.logt, 1 + 2 * p.nu1) * self.delta2


@dataclass(frozen=True)
class TTriple:
    T0: complex
    T1: complex
    T2: complex
    t: complex
    delta1: complex
    delta2: complex

    @property
    def ratio(self) -> complex:
        return 4 * self.T0 * self.T2 / self.T1 ** 2


# ---------------------------------------------------------------------------
# the sigma-form equation


def exact_solution(p: Parameters, t):
    """``(u, u', u'')`` of the exact solution ``u = -nu1**2 t + (nu1**2 + nu3 nu4)/2``."""
    n1sq = p.nu1 ** 2
    u = -n1sq * t + (n1sq + p.nu3 * p.nu4) / 2
    up = -n1sq + 0 * t
    return u, up, 0 * up


def compose_u(p: Parameters, st: StatePoint, d2=None):
    """``u, u', u''`` of the truncated expansion plus remainder.

    ``u''`` is None unless the remainder's second derivative ``d2`` is given.
    """
    x, th = st.logt
    nu1, C = p.nu1, p.C
    w = cpow_log(x, th, -2 * nu1)  # t**(-2 nu1)
    u = -nu1 ** 2 * st.t + (nu1 ** 2 + p.nu3 * p.nu4) / 2 + C * w + st.delta1
    up = -nu1 ** 2 - 2 * nu1 * C * w / st.t + st.delta2
    upp = None
    if d2 is not None:
        upp = 2 * nu1 * (2 * nu1 + 1) * C * w / st.t ** 2 + d2
    return u, up, upp


def sigma_terms(p: Parameters, t, u, up, upp):
    """The three terms ``(A, B, R)`` with residual ``A + B - R``.

    Generic over numpy, Python complex and mpmath numbers.
    """
    n1sq = p.nu1 ** 2
    a = up * (upp * t * (t - 1)) ** 2
    b = (2 * up * (t * up - u) - up ** 2 - n1sq * p.nu3 * p.nu4) ** 2
    r = (up + n1sq) ** 2 * (up + p.nu3 ** 2) * (up + p.nu4 ** 2)
    return a, b, r


def sigma_residual(p: Parameters, t, u, up, upp):
    """Left side minus right side of the sigma-form equation."""
    a, b, r = sigma_terms(p, t, u, up, upp)
    return a + b - r


def sigma_scale(p: Parameters, t, u, up, upp, kind: str = "terms"):
    """Magnitude against which a residual is judged.

    ``kind="terms"`` is the largest of the three terms.  ``kind="constituents"``
    sums the moduli of the products before any cancellation; it stays
    meaningful where the terms themselves vanish, e.g. on the exact solution.
    """
    if kind == "terms":
        a, b, r = sigma_terms(p, t, u, up, upp)
        return np.maximum(np.maximum(abs(a), abs(b)), abs(r))
    if kind != "constituents":
        raise ValueError(f"unknown scale kind {kind!r}")
    n1sq = abs(p.nu1) ** 2
    aup, au, aupp, at = abs(up), abs(u), abs(upp), abs(t)
    a = aup * (aupp * at * (at + 1)) ** 2
    b = (2 * aup * (at * aup + au) + aup ** 2 + n1sq * abs(p.nu3 * p.nu4)) ** 2
    r = (aup + n1sq) ** 2 * (aup + abs(p.nu3) ** 2) * (aup + abs(p.nu4) ** 2)
    return a + b + r


# ---------------------------------------------------------------------------
# compiled fixtures


def _param_value(e, p: Parameters) -> complex:
    return p.C ** e[IC] * p.nu1 ** e[IN1] * p.nu3 ** e[IN3] * p.nu4 ** e[IN4]


class CompiledPoly:
    """A DiffPoly specialised to numeric parameters, grouped by ``(e_D, e_Dp)``.

    Each group is a list of ``(coefficient, a, b)`` standing for
    ``coefficient * t**a * W**b`` with ``W = t**(2*nu1)``; the ``(t-1)``
    denominator is folded in as ``t**-d (1 - 1/t)**-d``.
    """

    def __init__(self, poly: DiffPoly, p: Parameters):
        poly = poly.canonical()
        if not poly.free_of("Dpp"):
            raise ValueError("fixture contains D''")
        self.d = poly.d
        groups: dict = {}
        for e, c in poly.terms.items():
            if e[IT_CAP] % 2:
                raise ValueError("odd power of T in a fixture")
            key = (e[ID], e[IDP])
            coef = complex(Fraction(c)) * _param_value(e, p)
            if coef == 0:
                continue
            sub = groups.setdefault(key, {})
            k = (e[IT] - poly.d, e[IT_CAP] // 2)
            sub[k] = sub.get(k, 0) + coef
        self.groups = {k: sorted(v.items()) for k, v in groups.items()}

    def group_values(self, pw: "Powers") -> dict:
        out = {}
        den = pw.one_minus_inv_t(self.d)
        for key, items in self.groups.items():
            acc = 0
            for (a, b), coef in items:
                acc = acc + coef * pw.t_pow(a) * pw.w_pow(b)
            out[key] = acc / den
        return out

    def __call__(self, pw: "Powers", d1=0, d2=0):
        total = np.zeros_like(pw.t)  # shaped even when every group vanishes
        for (i, j), val in self.group_values(pw).items():
            total = total + val * (d1 ** i if i else 1) * (d2 ** j if j else 1)
        return total


class Powers:
    """Cached integer powers of ``t`` and ``W = t**(2 nu1)`` at a set of points."""

    def __init__(self, x, theta, nu1: complex):
        self.x = np.asarray(x, dtype=float)
        self.theta = float(theta) if np.ndim(theta) == 0 else np.asarray(theta, dtype=float)
        self.nu1 = complex(nu1)
        self.t = np.exp(self.x) * np.exp(1j * self.theta)
        self._tp = {0: np.ones_like(self.t), 1: self.t, -1: 1 / self.t}
        self._wp = {0: np.ones_like(self.t)}
        self._den = {0: np.ones_like(self.t)}

    def t_pow(self, a: int):
        if a not in self._tp:
            base = self._tp[1 if a > 0 else -1]
            prev = self.t_pow(a - 1 if a > 0 else a + 1)
            self._tp[a] = prev * base
        return self._tp[a]

    def w_pow(self, b: int):
        if b not in self._wp:
            self._wp[b] = cpow_log(self.x, self.theta, 2 * self.nu1 * b) if np.ndim(self.theta) == 0 \
                else np.array([cpow_log(xi, th, 2 * self.nu1 * b) for xi, th in zip(self.x, self.theta)])
        return self._wp[b]

    def power(self, alpha: complex):
        """``t**alpha`` on the branch."""
        if np.ndim(self.theta) == 0:
            return cpow_log(self.x, self.theta, alpha)
        return np.array([cpow_log(xi, th, alpha) for xi, th in zip(self.x, self.theta)])

    def one_minus_inv_t(self, d: int):
        if d not in self._den:
            self._den[d] = (1 - self._tp[-1]) ** d
        return self._den[d]


@lru_cache(maxsize=None)
def _fixture(name: str) -> DiffPoly:
    return load_derived(name)


@lru_cache(maxsize=64)
def compiled(name: str, p: Parameters) -> CompiledPoly:
    """A derived fixture specialised to ``p`` (cached)."""
    return CompiledPoly(_fixture(name), p)


def leading_ctilde4(p: Parameters) -> complex:
    """Limit of ``c2/b1`` as ``t -> oo``, so that ``F(t,0,0) ~ -ctilde4 t**(-3-2 nu1)``."""
    num = _fixture("c2").leading_constant()
    den = _fixture("b1").leading_constant()
    vals = {"C": p.C, "n1": p.nu1, "n3": p.nu3, "n4": p.nu4, "t": 1.0 + 0j}
    return complex(num.evaluate(vals)) / complex(den.evaluate(vals))


class SigmaModel:
    """Remainder-equation evaluator at a fixed set of points on one branch.

    Args:
        p: Parameters.
        x: ``log|t|`` values.
        theta: Branch of ``arg t`` (scalar for a ray, or one per point).
    """

    def __init__(self, p: Parameters, x, theta):
        self.p = p
        self.pw = Powers(x, theta, p.nu1)
        self.t = self.pw.t
        self._T = None
        self._tab = None

    @classmethod
    def from_grid(cls, p: Parameters, grid) -> "SigmaModel":
        return cls(p, grid.x, grid.theta)

    @classmethod
    def from_states(cls, p: Parameters, states) -> "SigmaModel":
        x = [s.logt[0] for s in states]
        th = [s.branch for s in states]
        return cls(p, x, th if len(set(th)) > 1 else th[0])

    # -- T0, T1, T2 -----------------------------------------------------------

    def _compiled_T(self):
        if self._T is None:
            self._T = tuple(compiled(n, self.p) for n in ("T0", "T1", "T2"))
        return self._T

    def eval_T(self, d1, d2):
        T0, T1, T2 = self._compiled_T()
        return T0(self.pw, d1, d2), T1(self.pw, d1, d2), T2(self.pw, d1, d2)

    def _check_C(self):
        if self.p.C == 0:
            raise DegenerateError("C = 0: the family reduces to the exact solution; use exact solution")

    def _check_ratio(self, ratio):
        worst = float(np.max(np.abs(ratio))) if np.size(ratio) else 0.0
        if not np.isfinite(worst) or worst >= MAX_RATIO:
            raise RegimeError(f"discriminant ratio {worst:.3g} >= 1: outside the asymptotic regime: increase ρ")
        if worst >= WARN_RATIO:
            warnings.warn(f"discriminant ratio {worst:.3g} above {WARN_RATIO}", DiscriminantWarning, stacklevel=3)

    def F(self, d1, d2):
        """Root of the quadratic on the branch that vanishes with ``T0``."""
        self._check_C()
        T0, T1, T2 = self.eval_T(d1, d2)
        ratio = 4 * T0 * T2 / T1 ** 2
        self._check_ratio(ratio)
        return -2 * T0 / T1 / (1 + np.sqrt(1 - ratio))

    def F_branches(self, d1, d2):
        """``(plus, minus)`` roots of the quadratic, both from the textbook formula."""
        T0, T1, T2 = self.eval_T(d1, d2)
        disc = np.sqrt(T1 ** 2 - 4 * T0 * T2)
        return (-T1 + disc) / (2 * T2), (-T1 - disc) / (2 * T2)

    def R(self, d1, d2):
        """``F + 2 nu1 D'/t - 2 nu1 D/t**2``."""
        n1 = self.p.nu1
        it = self.pw.t_pow(-1)
        return self.F(d1, d2) + 2 * n1 * it * d2 - 2 * n1 * it ** 2 * d1

    # -- decomposed form ------------------------------------------------------

    def table(self) -> dict:
        """Numeric coefficient table (``a1 ... q6`` and ``ct4..ct6``)."""
        if self._tab is None:
            tab = {n: compiled(n, self.p)(self.pw) for n in TABLE_NAMES}
            for k in ("ct4", "ct5", "ct6"):
                num = compiled(f"{k}_num", self.p)(self.pw)
                den = compiled(f"{k}_den", self.p)(self.pw)
                tab[k] = num / den
            self._tab = tab
        return self._tab

    def R_pieces(self, d1, d2) -> dict:
        """``F0, F1s, Rt2, tau`` with ``R = -(F0 + F1s + Rt2) - tau``.

        Built only from the coefficient table, independently of ``eval_T``.
        """
        self._check_C()
        c = self.table()
        pw = self.pw
        it = pw.t_pow(-1)
        W, Wi = pw.w_pow(1), pw.w_pow(-1)
        t = pw.t
        s1, s2 = W * d1, t * W * d2

        F0 = c["ct4"] * it ** 3 * Wi
        F1s = c["ct5"] * it ** 3 * d1 + c["ct6"] * it ** 2 * d2

        a1, b1 = c["a1"], c["b1"]
        N = (c["q3"] * s1 ** 2 * s2 ** 2 * Wi ** 3 * it ** 4
             + c["q2"] * s2 ** 2 * s1 * Wi ** 2 * it ** 3
             + c["q5"] * s1 * s2 ** 3 * Wi ** 3 * it ** 4
             + c["d1"] * s2 * s1 ** 2 * Wi ** 2 * it ** 3
             + (-c["c0"] * a1 / b1 * it ** 3 * Wi ** 2 + c["d2"] * Wi * it ** 2) * s2 * s1
             + c["q6"] * s2 ** 4 * Wi ** 3 * it ** 4
             + c["q4"] * s2 ** 3 * Wi ** 2 * it ** 3
             + c["d3"] * s1 ** 2 * Wi * it ** 2
             + (-c["c1"] * a1 / b1 * it ** 3 * Wi ** 2
                + c["c2"] * a1 ** 2 / b1 ** 2 * it ** 5 * Wi ** 3
                + c["q1"] * Wi * it ** 2) * s2 ** 2)
        L = b1 + a1 * d2
        Rt2 = N / L

        # T0 rebuilt from the table; Q**2 = t**6 W**3 T0**2
        T0 = (c["c2"] * it ** 5 * Wi ** 2 + c["c0"] * it ** 4 * Wi * d1 + c["c1"] * it ** 3 * Wi * d2)
        for name, ((i, j), k) in P_SLOTS.items():
            T0 = T0 + c[name] * it ** k * d1 ** i * d2 ** j
        Fhat = (c["a2"] - d2) / L ** 3
        Q2 = t ** 6 * W ** 3 * T0 ** 2
        ratio = 4 * T0 * (c["a2"] - d2) * t ** 4 * W ** 2 / L ** 2
        self._check_ratio(ratio)
        tau = 4 * Q2 * Fhat / (1 + np.sqrt(1 - ratio)) ** 2
        return {"F0": F0, "F1s": F1s, "Rt2": Rt2, "tau": tau,
                "R": -(F0 + F1s + Rt2) - tau}

    def L_operator(self, phi, dphi, ddphi):
        """``phi'' + 2 nu1 phi'/t - 2 nu1 phi/t**2``."""
        n1 = self.p.nu1
        it = self.pw.t_pow(-1)
        return ddphi + 2 * n1 * it * dphi - 2 * n1 * it ** 2 * phi


# ---------------------------------------------------------------------------
# point-wise wrappers


def _model(p: Parameters, st: StatePoint) -> SigmaModel:
    x, th = st.logt
    return SigmaModel(p, np.array([x]), th)


def eval_T(p: Parameters, st: StatePoint) -> TTriple:
    """``T0, T1, T2`` at one state; raises :class:`DegenerateError` if ``T1 = 0``."""
    T0, T1, T2 = _model(p, st).eval_T(st.delta1, st.delta2)
    T0, T1, T2 = complex(T0[0]), complex(T1[0]), complex(T2[0])
    if T1 == 0:
        raise DegenerateError("T1 vanishes (C = 0): use exact solution")
    return TTriple(T0, T1, T2, st.t, st.delta1, st.delta2)


def eval_F(p: Parameters, st: StatePoint) -> complex:
    return complex(_model(p, st).F(st.delta1, st.delta2)[0])


def eval_R(p: Parameters, st: StatePoint, decomposed: bool = False):
    """``R`` at one state; with ``decomposed`` also the four pieces."""
    m = _model(p, st)
    r = complex(m.R(st.delta1, st.delta2)[0])
    if not decomposed:
        return r
    pieces = {k: complex(v[0]) for k, v in m.R_pieces(st.delta1, st.delta2).items()}
    return r, pieces


# ---------------------------------------------------------------------------
# high-precision reference


def T_reference(p: Parameters, st: StatePoint, dps: int = 50):
    """``T0, T1, T2`` by direct multi-precision evaluation of the fixtures."""
    with mpmath.workdps(dps):
        x, th = st.logt
        t = mpmath.exp(mpmath.mpf(x)) * mpmath.expjpi(mpmath.mpf(th) / mpmath.pi)
        lt = mpmath.mpf(x) + 1j * mpmath.mpf(th)
        vals = {"t": t, "T": mpmath.exp(mpmath.mpc(p.nu1) * lt), "D": mpmath.mpc(st.delta1),
                "Dp": mpmath.mpc(st.delta2), "C": mpmath.mpc(p.C), "n1": mpmath.mpc(p.nu1),
                "n3": mpmath.mpc(p.nu3), "n4": mpmath.mpc(p.nu4)}
        return tuple(_fixture(n).evaluate(vals) for n in ("T0", "T1", "T2"))


def sigma_residual_mp(p: Parameters, t, theta, d1, d2, dd2, dps: int = 50):
    """Residual and term scale of the composed ``u`` in ``dps``-digit arithmetic.

    Returns ``(|residual|, max term modulus)`` as floats.
    """
    with mpmath.workdps(dps):
        t = mpmath.mpc(t)
        lt = mpmath.log(abs(t)) + 1j * mpmath.mpf(theta)
        nu1, C = mpmath.mpc(p.nu1), mpmath.mpc(p.C)
        w = mpmath.exp(-2 * nu1 * lt)
        u = -nu1 ** 2 * t + (nu1 ** 2 + mpmath.mpc(p.nu3) * mpmath.mpc(p.nu4)) / 2 + C * w + mpmath.mpc(d1)
        up = -nu1 ** 2 - 2 * nu1 * C * w / t + mpmath.mpc(d2)
        upp = 2 * nu1 * (2 * nu1 + 1) * C * w / t ** 2 + mpmath.mpc(dd2)
        mp_p = _MpParams(nu1, mpmath.mpc(p.nu3), mpmath.mpc(p.nu4))
        a, b, r = sigma_terms(mp_p, t, u, up, upp)
        return float(abs(a + b - r)), float(max(abs(a), abs(b), abs(r)))


@dataclass(frozen=True)
class _MpParams:
    nu1: object
    nu3: object
    nu4: object
