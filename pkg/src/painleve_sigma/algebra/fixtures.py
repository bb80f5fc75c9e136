"""Reading and writing formula fixtures.

Two plain-text formats are supported.

Expression files (``*.expr``) hold one formula written with Python operator
syntax over the fixture symbols (``t T D Dp Dpp C n1 n3 n4`` plus any names
bound by the caller, e.g. ``a1``, ``S1``).  Lines starting with ``#`` are
comments.  Only ``+ - * / **`` with integer literals are accepted; division is
exact polynomial inversion where the divisor is a unit and a rational function
otherwise.

Monomial files (``*.fix``) list one monomial per line as an S-expression::

    (p/q e_t e_T e_D e_Dp e_Dpp e_C e_n1 e_n3 e_n4 d)

where ``d`` is the power of ``(t-1)`` in the denominator.  All lines of one
file share the same ``d``.
"""

from __future__ import annotations

import ast
import re
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Mapping

from .diffpoly import NVARS, AlgebraError, DiffPoly, RatFunc, symbols

DATA = "painleve_sigma.algebra.data"


class FixtureError(ValueError):
    """Malformed fixture text."""


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("#", 1)[0] for line in text.splitlines())


class _Evaluator(ast.NodeVisitor):
    def __init__(self, env: Mapping[str, object]):
        self.env = env

    def generic_visit(self, node):
        raise FixtureError(f"unsupported syntax: {ast.dump(node)}")

    def visit_Expression(self, node):
        return self.visit(node.body)

    def visit_Name(self, node):
        try:
            return RatFunc.lift(self.env[node.id])
        except KeyError:
            raise FixtureError(f"unknown symbol {node.id!r}") from None

    def visit_Constant(self, node):
        if not isinstance(node.value, int) or isinstance(node.value, bool):
            raise FixtureError(f"only integer literals allowed, got {node.value!r}")
        return RatFunc.lift(node.value)

    def visit_UnaryOp(self, node):
        val = self.visit(node.operand)
        if isinstance(node.op, ast.USub):
            return -val
        if isinstance(node.op, ast.UAdd):
            return val
        raise FixtureError("unsupported unary operator")

    def visit_BinOp(self, node):
        if isinstance(node.op, ast.Pow):
            k = _int_literal(node.right)
            return self.visit(node.left) ** k
        lhs, rhs = self.visit(node.left), self.visit(node.right)
        if isinstance(node.op, ast.Add):
            return lhs + rhs
        if isinstance(node.op, ast.Sub):
            return lhs - rhs
        if isinstance(node.op, ast.Mult):
            return lhs * rhs
        if isinstance(node.op, ast.Div):
            return lhs / rhs
        raise FixtureError(f"unsupported operator {type(node.op).__name__}")


def _int_literal(node) -> int:
    if isinstance(node, ast.Constant) and isinstance(node.value, int):
        return node.value
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        return -_int_literal(node.operand)
    raise FixtureError("exponents must be integer literals")


def parse_expression(text: str, env: Mapping[str, object] | None = None) -> RatFunc:
    """Evaluate fixture expression text to an exact :class:`RatFunc`."""
    scope = dict(symbols())
    if env:
        scope.update(env)
    src = " ".join(_strip_comments(text).split())
    if not src:
        raise FixtureError("empty expression")
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as exc:
        raise FixtureError(f"cannot parse expression: {exc}") from None
    try:
        return _Evaluator(scope).visit(tree)
    except AlgebraError as exc:
        raise FixtureError(str(exc)) from None


def parse_poly(text: str, env: Mapping[str, object] | None = None) -> DiffPoly:
    out = parse_expression(text, env)
    if not out.is_poly:
        raise FixtureError("expression does not reduce to a polynomial")
    return out.num


_MONO = re.compile(r"\(\s*([-+]?\d+(?:/\d+)?)((?:\s+-?\d+){%d})\s*\)" % (NVARS + 1))


def dump_monomials(p: DiffPoly) -> str:
    """Serialize to the monomial-list format (canonical, sorted)."""
    c = p.canonical()
    lines = []
    for e, v in sorted(c.terms.items()):
        coeff = f"{v.numerator}/{v.denominator}" if v.denominator != 1 else f"{v.numerator}"
        lines.append("(" + " ".join([coeff, *map(str, e), str(c.d)]) + ")")
    return "\n".join(lines) + "\n"


def load_monomials(text: str) -> DiffPoly:
    terms, ds = {}, set()
    body = _strip_comments(text)
    for m in _MONO.finditer(body):
        coeff = Fraction(m.group(1))
        nums = [int(x) for x in m.group(2).split()]
        e, d = tuple(nums[:NVARS]), nums[NVARS]
        ds.add(d)
        if e in terms:
            raise FixtureError(f"duplicate monomial {e}")
        terms[e] = coeff
    leftover = _MONO.sub("", body).strip()
    if leftover:
        raise FixtureError(f"unparsed fixture content near {leftover[:40]!r}")
    if len(ds) > 1:
        raise FixtureError("mixed (t-1) powers in one fixture")
    return DiffPoly(terms, ds.pop() if ds else 0)


def read_data(*parts: str) -> str:
    return resources.files(DATA).joinpath(*parts).read_text()


def data_path(*parts: str) -> Path:
    return Path(str(resources.files(DATA).joinpath(*parts)))


def transcribed_source(name: str, override_dir: Path | None = None) -> str:
    if override_dir is not None:
        return (Path(override_dir) / f"{name}.expr").read_text()
    return read_data("transcribed", f"{name}.expr")


def load_derived(name: str) -> DiffPoly:
    return load_monomials(read_data("derived", f"{name}.fix"))
