"""Symbolic substitution of the truncated expansion into the sigma-form equation."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .diffpoly import AlgebraError, DiffPoly, RatFunc, symbols


@dataclass(frozen=True)
class QuadraticInD2:
    """``T2*Dpp**2 + T1*Dpp + T0``, each coefficient free of ``Dpp``."""

    T2: DiffPoly
    T1: DiffPoly
    T0: DiffPoly
    normalization: DiffPoly  # the raw sigma expression equals normalization * (quadratic)


def expansion_u() -> tuple[DiffPoly, DiffPoly, DiffPoly]:
    """``u`` of the truncated expansion plus remainder, and its two derivatives.

    The derivatives are obtained with :meth:`DiffPoly.derive`, not written out.
    """
    s = symbols()
    t, T, D, C, n1, n3, n4 = s["t"], s["T"], s["D"], s["C"], s["n1"], s["n3"], s["n4"]
    half = Fraction(1, 2)
    u = -(n1 ** 2) * t + (n1 ** 2 + n3 * n4).scale(half) + C * T ** -2 + D
    up = u.derive()
    upp = up.derive()
    return u, up, upp


def sigma_expression(u: DiffPoly, up: DiffPoly, upp: DiffPoly) -> DiffPoly:
    """Left side minus right side of the sigma-form equation, fully expanded."""
    s = symbols()
    t, n1, n3, n4 = s["t"], s["n1"], s["n3"], s["n4"]
    tm1 = t - 1
    lhs1 = up * (upp * t * tm1) ** 2
    bracket = (up * (t * up - u)).scale(2) - up ** 2 - n1 ** 2 * n3 * n4
    rhs = (up + n1 ** 2) ** 2 * (up + n3 ** 2) * (up + n4 ** 2)
    return lhs1 + bracket ** 2 - rhs


def substitute_expansion() -> QuadraticInD2:
    """Collect the substituted equation by powers of ``Dpp``.

    The result is normalized by ``-t**2 (t-1)**2`` so that the coefficient of
    ``Dpp**2`` starts ``-Dp + ...``.
    """
    expr = sigma_expression(*expansion_u())
    parts = expr.collect(("Dpp",))
    if max(k for (k,) in parts) != 2:
        raise AlgebraError("substituted equation is not quadratic in Dpp")
    norm = -(DiffPoly.var("t") ** 2) * DiffPoly.t_minus_one(2)
    inv = norm.unit_inverse()
    coeff = {k: (parts.get((k,), DiffPoly()) * inv).canonical() for k in (0, 1, 2)}
    return QuadraticInD2(T2=coeff[2], T1=coeff[1], T0=coeff[0], normalization=norm)


# ---------------------------------------------------------------------------
# coefficient table

# the factor of t that makes each piece of P an element of the class F
P_SLOTS = {
    # name: ((e_D, e_Dp), power of t multiplying the T0 coefficient)
    "d1": ((2, 1), 4),
    "d2": ((1, 1), 3),
    "d3": ((2, 0), 4),
    "q1": ((0, 2), 2),
    "q2": ((1, 2), 3),
    "q3": ((2, 2), 4),
    "q4": ((0, 3), 2),
    "q5": ((1, 3), 3),
    "q6": ((0, 4), 2),
}


@dataclass
class CoefficientTable:
    """The bounded coefficients into which ``T0, T1, T2`` decompose.

    ``a1, b1, a2, c0, c1, c2`` and the ``d_j, q_j`` are polynomials;
    ``ctilde4..6`` are quotients with denominators built from ``b1``.
    """

    a1: DiffPoly
    b1: DiffPoly
    a2: DiffPoly
    c0: DiffPoly
    c1: DiffPoly
    c2: DiffPoly
    P: dict[str, DiffPoly]
    ctilde4: RatFunc
    ctilde5: RatFunc
    ctilde6: RatFunc
    stray_T0_monomials: list = field(default_factory=list)
    F_violations: dict = field(default_factory=dict)

    def entries(self) -> dict:
        out = {"a1": self.a1, "b1": self.b1, "a2": self.a2,
               "c0": self.c0, "c1": self.c1, "c2": self.c2}
        out.update(self.P)
        return out

    def env(self) -> dict:
        """Symbol bindings for fixture expressions (also binds S1, S2)."""
        s = symbols()
        env = dict(self.entries())
        env.update(ct4=self.ctilde4, ct5=self.ctilde5, ct6=self.ctilde6)
        env["S1"] = s["D"].shift(T=2)
        env["S2"] = s["Dp"].shift(t=1, T=2)
        return env

    def leading_constants(self) -> dict:
        return {k: v.leading_constant() for k, v in self.entries().items()}


def extract_coefficients(q: QuadraticInD2) -> CoefficientTable:
    """Read off the bounded coefficients of ``T0, T1, T2``.

    Entries that fail to be bounded at infinity are listed in
    ``F_violations`` rather than raising.
    """
    n1 = DiffPoly.var("n1")
    t1 = q.T1.collect(("D", "Dp"))
    if set(t1) - {(0, 0), (0, 1)}:
        raise AlgebraError("T1 is not affine in Dp")
    a1 = t1.get((0, 1), DiffPoly()).shift(t=2, T=2).canonical()
    b1 = t1.get((0, 0), DiffPoly()).shift(t=2, T=2).canonical()
    a2 = (q.T2 + DiffPoly.var("Dp")).canonical()

    t0 = q.T0.collect(("D", "Dp"))
    c2 = t0.get((0, 0), DiffPoly()).shift(t=5, T=4).canonical()
    c0 = t0.get((1, 0), DiffPoly()).shift(t=4, T=2).canonical()
    c1 = t0.get((0, 1), DiffPoly()).shift(t=3, T=2).canonical()
    P = {}
    for name, (key, tp) in P_SLOTS.items():
        P[name] = t0.get(key, DiffPoly()).shift(t=tp).canonical()
    known = {(0, 0), (1, 0), (0, 1)} | {k for k, _ in P_SLOTS.values()}
    stray = sorted(set(k for k, v in t0.items() if v) - known)

    b1r = RatFunc(b1)
    ct4 = RatFunc(c2) / b1r
    # linear part of T0/T1 is  c0 D/(b1 t^2) + (c1/b1 - c2 a1/(t^2 T^2 b1^2)) Dp/t ;
    # its dominant piece is -2 n1 D/t^2 + 2 n1 Dp/t, the rest defines ctilde5, ctilde6
    ct5 = RatFunc((c0 + (n1 * b1).scale(2)).shift(t=1)) / b1r
    ct6 = (RatFunc((c1 - (n1 * b1).scale(2)).shift(t=1)) / b1r
           - RatFunc((c2 * a1).shift(t=-1, T=-2)) / (b1r * b1r))

    table = CoefficientTable(a1=a1, b1=b1, a2=a2, c0=c0, c1=c1, c2=c2, P=P,
                             ctilde4=ct4, ctilde5=ct5, ctilde6=ct6,
                             stray_T0_monomials=stray)
    for name, val in table.entries().items():
        if not val.in_class_F():
            table.F_violations[name] = val.offending_F_monomials()
    for name, val in (("ctilde4", ct4), ("ctilde5", ct5), ("ctilde6", ct6)):
        if not val.in_class_F():
            table.F_violations[name] = "numerator/denominator not bounded or denominator vanishes at infinity"
    return table


def derived_fixtures(q: QuadraticInD2 | None = None) -> dict:
    """Engine output as ``{fixture name: DiffPoly}``.

    Quotients ``ctilde4..6`` are stored as ``ctK_num`` / ``ctK_den`` pairs.
    """
    q = substitute_expansion() if q is None else q
    table = extract_coefficients(q)
    out = {"T0": q.T0, "T1": q.T1, "T2": q.T2}
    out.update(table.entries())
    for k, r in (("ct4", table.ctilde4), ("ct5", table.ctilde5), ("ct6", table.ctilde6)):
        out[f"{k}_num"], out[f"{k}_den"] = r.num, r.den
    return out


def write_derived(directory, q: QuadraticInD2 | None = None) -> list:
    """Write every derived fixture as a ``.fix`` monomial list; returns paths."""
    from pathlib import Path

    from .fixtures import dump_monomials

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, poly in derived_fixtures(q).items():
        path = directory / f"{name}.fix"
        path.write_text(dump_monomials(poly))
        paths.append(path)
    return paths
