"""Exact sparse differential polynomials over the rationals.

A :class:`DiffPoly` stands for ``P / (t - 1)**d`` where ``P`` is a finite sum of
monomials in nine indeterminates::

    t, T, D, Dp, Dpp, C, n1, n3, n4

``T`` plays the role of ``t**n1`` (it has its own derivation rule), ``D``,
``Dp``, ``Dpp`` are the remainder and its first two derivatives, and ``C``,
``n1``, ``n3``, ``n4`` are the free constants.  Powers of ``t`` and ``T`` may be
negative; all the others are non-negative.
"""

from __future__ import annotations

from collections import defaultdict
from fractions import Fraction
from typing import Iterable, Mapping

VARS = ("t", "T", "D", "Dp", "Dpp", "C", "n1", "n3", "n4")
NVARS = len(VARS)
IT, IT_CAP, ID, IDP, IDPP, IC, IN1, IN3, IN4 = range(NVARS)
_SIGNED = (IT, IT_CAP)

Exponents = tuple  # 9 ints


def _zero_exp() -> Exponents:
    return (0,) * NVARS


def _bump(e: Exponents, i: int, k: int = 1) -> Exponents:
    lst = list(e)
    lst[i] += k
    return tuple(lst)


def _add_exp(a: Exponents, b: Exponents) -> Exponents:
    return tuple(x + y for x, y in zip(a, b))


class AlgebraError(ValueError):
    """Raised on operations outside the supported algebra (e.g. non-unit division)."""


class DiffPoly:
    """Sparse polynomial ``P / (t-1)**d`` with :class:`~fractions.Fraction` coefficients.

    Instances are treated as immutable.  Arithmetic is exact; equality is
    structural after cancelling common ``(t-1)`` factors, so two objects compare
    equal exactly when they denote the same rational function.
    """

    __slots__ = ("terms", "d", "_canon")

    def __init__(self, terms: Mapping[Exponents, Fraction] | None = None, d: int = 0):
        if d < 0:
            raise AlgebraError("negative (t-1) power")
        clean = {}
        for e, c in (terms or {}).items():
            if c:
                if len(e) != NVARS:
                    raise AlgebraError(f"exponent vector {e!r} must have {NVARS} entries")
                if any(e[i] < 0 for i in range(NVARS) if i not in _SIGNED):
                    raise AlgebraError(f"negative exponent on a non-invertible symbol in {e!r}")
                clean[tuple(e)] = Fraction(c)
        self.terms: dict[Exponents, Fraction] = clean
        self.d = d
        self._canon = None

    # -- constructors -----------------------------------------------------

    @classmethod
    def const(cls, c) -> "DiffPoly":
        return cls({_zero_exp(): Fraction(c)})

    @classmethod
    def var(cls, name: str, power: int = 1) -> "DiffPoly":
        return cls({_bump(_zero_exp(), VARS.index(name), power): Fraction(1)})

    @classmethod
    def monomial(cls, coeff, **powers: int) -> "DiffPoly":
        e = list(_zero_exp())
        for name, k in powers.items():
            e[VARS.index(name)] = k
        return cls({tuple(e): Fraction(coeff)})

    @classmethod
    def t_minus_one(cls, power: int = 1) -> "DiffPoly":
        """``(t - 1)**power``; negative powers are stored in ``d``."""
        if power < 0:
            return cls({_zero_exp(): Fraction(1)}, d=-power)
        out = cls.const(1)
        base = cls.var("t") - 1
        for _ in range(power):
            out = out * base
        return out

    # -- basic protocol ---------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        return f"DiffPoly({self.to_str()})"

    def copy(self) -> "DiffPoly":
        return DiffPoly(dict(self.terms), self.d)

    def _coerce(self, other) -> "DiffPoly":
        if isinstance(other, DiffPoly):
            return other
        if isinstance(other, (int, Fraction)):
            return DiffPoly.const(other)
        return NotImplemented

    def _with_d(self, d: int) -> dict:
        """Numerator rescaled to denominator ``(t-1)**d`` (``d >= self.d``)."""
        if d == self.d:
            return self.terms
        return (self._numerator() * DiffPoly.t_minus_one(d - self.d)).terms

    def _numerator(self) -> "DiffPoly":
        return DiffPoly(self.terms, 0)

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        d = max(self.d, other.d)
        acc = defaultdict(Fraction, self._with_d(d))
        for e, c in other._with_d(d).items():
            acc[e] += c
        return DiffPoly(acc, d)

    __radd__ = __add__

    def __neg__(self):
        return DiffPoly({e: -c for e, c in self.terms.items()}, self.d)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        acc = defaultdict(Fraction)
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                acc[_add_exp(e1, e2)] += c1 * c2
        return DiffPoly(acc, self.d + other.d)

    __rmul__ = __mul__

    def scale(self, c) -> "DiffPoly":
        c = Fraction(c)
        return DiffPoly({e: c * v for e, v in self.terms.items()}, self.d)

    def __pow__(self, k: int):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return self.unit_inverse() ** (-k)
        out = DiffPoly.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def shift(self, **powers: int) -> "DiffPoly":
        """Multiply by a monomial with unit coefficient (negative powers allowed for t, T)."""
        e = list(_zero_exp())
        for name, k in powers.items():
            e[VARS.index(name)] = k
        e = tuple(e)
        return DiffPoly({_add_exp(k_, e): c for k_, c in self.terms.items()}, self.d)

    # -- (t-1) bookkeeping --------------------------------------------------

    def _groups(self) -> dict:
        """Numerator grouped by the non-t exponents: rest -> {e_t: coeff}."""
        groups: dict = defaultdict(dict)
        for e, c in self.terms.items():
            groups[e[1:]][e[0]] = c
        return groups

    def divide_t_minus_one(self) -> "DiffPoly | None":
        """Exact quotient of the numerator by ``(t-1)``, or ``None`` if it does not divide."""
        out = {}
        for rest, coeffs in self._groups().items():
            if sum(coeffs.values()) != 0:
                return None
            lo, hi = min(coeffs), max(coeffs)
            # synthetic division of sum c_k t^k by (t - 1), from the top down
            carry = Fraction(0)
            for k in range(hi, lo, -1):
                carry += coeffs.get(k, 0)
                if carry:
                    out[(k - 1,) + rest] = carry
        return DiffPoly(out, 0)

    def canonical(self) -> "DiffPoly":
        """Equivalent object with every cancellable ``(t-1)`` removed from ``d``."""
        if self._canon is not None:
            return self._canon
        num, d = self._numerator(), self.d
        while d > 0 and num.terms:
            q = num.divide_t_minus_one()
            if q is None:
                break
            num, d = q, d - 1
        if not num.terms:
            d = 0
        canon = DiffPoly(num.terms, d)
        canon._canon = canon
        self._canon = canon
        return canon

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self.canonical(), other.canonical()
        return a.d == b.d and a.terms == b.terms

    def __hash__(self):
        c = self.canonical()
        return hash((c.d, frozenset(c.terms.items())))

    def unit_inverse(self) -> "DiffPoly":
        """Inverse of ``c * monomial * (t-1)**k`` (the only invertible shapes).

        The monomial may only involve ``t`` and ``T``; anything else raises
        :class:`AlgebraError`.
        """
        num, k = self._numerator(), 0
        while len(num.terms) > 1:
            q = num.divide_t_minus_one()
            if q is None:
                raise AlgebraError(f"cannot invert non-unit {self.to_str()}")
            num, k = q, k + 1
        if len(num.terms) != 1:
            raise AlgebraError("division by zero polynomial")
        (e, c), = num.terms.items()
        if any(e[i] for i in range(NVARS) if i not in _SIGNED):
            raise AlgebraError(f"cannot invert monomial containing symbols other than t, T: {self.to_str()}")
        inv = DiffPoly({(-e[0], -e[1]) + (0,) * (NVARS - 2): 1 / c}, d=k)
        # multiply back the (t-1)**self.d that was in our denominator
        return inv * DiffPoly.t_minus_one(self.d)

    def is_unit(self) -> bool:
        try:
            self.unit_inverse()
        except AlgebraError:
            return False
        return True

    # -- differential structure ---------------------------------------------

    def derive(self) -> "DiffPoly":
        """Formal d/dt, with ``dT/dt = n1 * T / t``, ``dD = Dp``, ``dDp = Dpp``."""
        acc = defaultdict(Fraction)
        for e, c in self.terms.items():
            if e[IDPP]:
                raise AlgebraError("cannot differentiate an expression containing Dpp")
            if e[IT]:
                acc[_bump(e, IT, -1)] += c * e[IT]
            if e[IT_CAP]:
                acc[_bump(_bump(e, IT, -1), IN1)] += c * e[IT_CAP]
            if e[ID]:
                acc[_bump(_bump(e, ID, -1), IDP)] += c * e[ID]
            if e[IDP]:
                acc[_bump(_bump(e, IDP, -1), IDPP)] += c * e[IDP]
        dp = DiffPoly(acc, 0)
        if self.d == 0:
            return dp
        # (P / (t-1)^d)' = (P' (t-1) - d P) / (t-1)^(d+1)
        num = dp * (DiffPoly.var("t") - 1) - self._numerator().scale(self.d)
        return DiffPoly(num.terms, self.d + 1)

    # -- inspection -----------------------------------------------------------

    def degree_in(self, name: str) -> int:
        i = VARS.index(name)
        return max((e[i] for e in self.terms), default=0)

    def coefficient(self, **powers: int) -> "DiffPoly":
        """Coefficient of the given powers of D, Dp, Dpp (others untouched)."""
        sel = {VARS.index(n): k for n, k in powers.items()}
        for i in sel:
            if i not in (ID, IDP, IDPP):
                raise AlgebraError("coefficient() extracts only D, Dp, Dpp powers")
        out = {}
        for e, c in self.terms.items():
            if all(e[i] == k for i, k in sel.items()):
                lst = list(e)
                for i in sel:
                    lst[i] = 0
                out[tuple(lst)] = c
        return DiffPoly(out, self.d)

    def collect(self, names: Iterable[str] = ("D", "Dp", "Dpp")) -> dict:
        """Split by powers of the named symbols: {(k1, k2, ...): DiffPoly}."""
        idx = [VARS.index(n) for n in names]
        out: dict = defaultdict(dict)
        for e, c in self.terms.items():
            key = tuple(e[i] for i in idx)
            lst = list(e)
            for i in idx:
                lst[i] = 0
            out[key][tuple(lst)] = c
        return {k: DiffPoly(v, self.d) for k, v in out.items()}

    def free_of(self, *names: str) -> bool:
        idx = [VARS.index(n) for n in names]
        return all(e[i] == 0 for e in self.terms for i in idx)

    def T_parity_even(self) -> bool:
        return all(e[IT_CAP] % 2 == 0 for e in self.terms)

    def in_class_F(self) -> bool:
        """Bounded as t -> oo: a function of (1/t, 1/T) analytic at the origin.

        Requires no remainder symbols, ``e_T <= 0`` and ``e_t <= d`` on every
        monomial of the canonical form.
        """
        c = self.canonical()
        if not c.free_of("D", "Dp", "Dpp"):
            return False
        return all(e[IT_CAP] <= 0 and e[IT] <= c.d for e in c.terms)

    def offending_F_monomials(self) -> list:
        c = self.canonical()
        return [e for e in c.terms if e[IT_CAP] > 0 or e[IT] > c.d]

    def leading_constant(self) -> "DiffPoly":
        """Limit as t -> oo for an element of the class F (a polynomial in C, n1, n3, n4)."""
        c = self.canonical()
        out = {}
        for e, v in c.terms.items():
            if e[IT] == c.d and e[IT_CAP] == 0:
                out[(0, 0) + e[2:]] = v
        return DiffPoly(out, 0)

    def evaluate(self, values: Mapping[str, object]):
        """Numeric value; ``values`` maps every symbol that occurs to a number.

        Works with any numeric type supporting ``+ * **`` with ints and
        Fractions converted through ``float`` free paths (Fraction, mpmath,
        complex).  ``T`` must be supplied explicitly (it is ``t**n1`` on the
        chosen branch).
        """
        t = values["t"]
        total = 0
        for e, c in self.terms.items():
            term = _coerce_number(c, t)
            for i, k in enumerate(e):
                if k:
                    term = term * values[VARS[i]] ** k
            total = total + term
        if self.d:
            total = total / (t - 1) ** self.d
        return total

    def to_str(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms.items()):
            fac = "*".join(
                (VARS[i] if k == 1 else f"{VARS[i]}**{k}" if k > 0 else f"{VARS[i]}**({k})")
                for i, k in enumerate(e) if k
            )
            parts.append(f"({c})" + (f"*{fac}" if fac else ""))
        s = " + ".join(parts)
        return f"({s})/(t-1)**{self.d}" if self.d else s


def _coerce_number(c: Fraction, like):
    if isinstance(like, Fraction) or isinstance(like, int):
        return c
    try:
        import mpmath

        if isinstance(like, (mpmath.mpf, mpmath.mpc)):
            return mpmath.mpf(c.numerator) / c.denominator
    except ImportError:  # pragma: no cover
        pass
    return c.numerator / c.denominator


def symbols() -> dict:
    """The nine base symbols as DiffPolys, keyed by their fixture names."""
    return {name: DiffPoly.var(name) for name in VARS}


class RatFunc:
    """Quotient ``num / den`` of DiffPolys, kept without any gcd reduction.

    Unit denominators (monomial times a power of ``t-1``) are absorbed into the
    numerator eagerly, so most values stay plain polynomials.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: DiffPoly, den: DiffPoly | None = None):
        if den is None:
            den = DiffPoly.const(1)
        if den.is_zero():
            raise AlgebraError("zero denominator")
        if den.is_unit():
            num, den = num * den.unit_inverse(), DiffPoly.const(1)
        self.num = num
        self.den = den

    @staticmethod
    def lift(x) -> "RatFunc":
        if isinstance(x, RatFunc):
            return x
        if isinstance(x, DiffPoly):
            return RatFunc(x)
        if isinstance(x, (int, Fraction)):
            return RatFunc(DiffPoly.const(x))
        raise TypeError(f"cannot lift {type(x).__name__}")

    @property
    def is_poly(self) -> bool:
        return self.den == DiffPoly.const(1)

    def as_poly(self) -> DiffPoly:
        if not self.is_poly:
            raise AlgebraError("rational function has a non-unit denominator")
        return self.num

    def __add__(self, other):
        o = RatFunc.lift(other)
        if self.den == o.den:
            return RatFunc(self.num + o.num, self.den)
        return RatFunc(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(-self.num, self.den)

    def __sub__(self, other):
        return self + (-RatFunc.lift(other))

    def __rsub__(self, other):
        return RatFunc.lift(other) - self

    def __mul__(self, other):
        o = RatFunc.lift(other)
        return RatFunc(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = RatFunc.lift(other)
        if o.num.is_zero():
            raise AlgebraError("division by zero")
        return RatFunc(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other):
        return RatFunc.lift(other) / self

    def __pow__(self, k: int):
        if k < 0:
            return RatFunc(DiffPoly.const(1)) / (self ** (-k))
        out = RatFunc(DiffPoly.const(1))
        for _ in range(k):
            out = out * self
        return out

    def cross_difference(self, other) -> DiffPoly:
        """``self.num*other.den - other.num*self.den``: zero iff the two are equal."""
        o = RatFunc.lift(other)
        return (self.num * o.den - o.num * self.den).canonical()

    def __eq__(self, other):
        try:
            return self.cross_difference(other).is_zero()
        except TypeError:
            return NotImplemented

    __hash__ = None

    def in_class_F(self) -> bool:
        """Bounded as t -> oo, as a function of ``(1/t, 1/T)``.

        Numerator and denominator are divided by the denominator's corner
        monomial ``t**g T**h`` (largest powers of each, which must occur
        together); then both must lie in F and the denominator must have a
        non-zero limit.
        """
        den = self.den.canonical()
        if not den.terms:
            return False
        g = max(e[IT] for e in den.terms) - den.d
        h = max(e[IT_CAP] for e in den.terms)
        num, den = self.num.shift(t=-g, T=-h), den.shift(t=-g, T=-h)
        return (num.in_class_F() and den.in_class_F()
                and not den.leading_constant().is_zero())

    def evaluate(self, values):
        return self.num.evaluate(values) / self.den.evaluate(values)

    def __repr__(self):
        if self.is_poly:
            return f"RatFunc({self.num.to_str()})"
        return f"RatFunc(({self.num.to_str()}) / ({self.den.to_str()}))"
