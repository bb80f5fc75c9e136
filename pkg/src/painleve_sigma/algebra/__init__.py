"""Exact differential-polynomial algebra for the sigma-form remainder equation."""

from .derivation import (CoefficientTable, QuadraticInD2, derived_fixtures, expansion_u,
                         extract_coefficients, substitute_expansion)
from .diffpoly import AlgebraError, DiffPoly, RatFunc, symbols
from .fixtures import FixtureError, dump_monomials, load_derived, load_monomials, parse_expression, parse_poly
from .verify import (IdentityResult, VerificationReport, run_verification, verify_T0_decomposition,
                     verify_splittings)

__all__ = [
    "AlgebraError",
    "CoefficientTable",
    "DiffPoly",
    "FixtureError",
    "IdentityResult",
    "QuadraticInD2",
    "RatFunc",
    "VerificationReport",
    "derived_fixtures",
    "dump_monomials",
    "expansion_u",
    "extract_coefficients",
    "load_derived",
    "load_monomials",
    "parse_expression",
    "parse_poly",
    "run_verification",
    "substitute_expansion",
    "symbols",
    "verify_T0_decomposition",
    "verify_splittings",
]
