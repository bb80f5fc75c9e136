"""Large-``t`` solutions of the sigma-form equation carrying a free constant ``C``.

The solution is written as an explicit truncated expansion plus a remainder
``D``; the remainder is the fixed point of an integral operator on a ray and
is cross-checked against direct inward integration.
"""

from .bounds import BallCertificate, certify, eval_A_B, eval_Phi
from .domain import DomainError, Parameters, RayGrid, Sector, cpow, make_parameters, make_ray_grid
from .inward import integrate_inward
from .picard import JOperator, RemainderSolution, default_grid, picard_solve, weighted_norm
from .sigma import (DiscriminantWarning, RegimeError, StatePoint, compose_u, eval_F, eval_R, eval_T,
                    exact_solution, sigma_residual)

__version__ = "0.1.0"

__all__ = [
    "BallCertificate",
    "DiscriminantWarning",
    "DomainError",
    "JOperator",
    "Parameters",
    "RayGrid",
    "RegimeError",
    "RemainderSolution",
    "Sector",
    "StatePoint",
    "certify",
    "compose_u",
    "cpow",
    "default_grid",
    "eval_A_B",
    "eval_F",
    "eval_Phi",
    "eval_R",
    "eval_T",
    "exact_solution",
    "integrate_inward",
    "make_parameters",
    "make_ray_grid",
    "picard_solve",
    "sigma_residual",
    "weighted_norm",
]
