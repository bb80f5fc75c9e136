import math

import pytest

from painleve_sigma.algebra import extract_coefficients, run_verification, substitute_expansion
from painleve_sigma.domain import make_parameters
from painleve_sigma.picard import default_grid, picard_solve


@pytest.fixture(scope="session")
def quadratic():
    return substitute_expansion()


@pytest.fixture(scope="session")
def table(quadratic):
    return extract_coefficients(quadratic)


@pytest.fixture(scope="session")
def report():
    return run_verification()


@pytest.fixture(scope="session")
def p1111():
    return make_parameters(1, 1, 1, 1)


@pytest.fixture(scope="session")
def solutions(p1111):
    """Converged runs at rho = 50 on the rays 0 and pi/4."""
    return {th: picard_solve(p1111, default_grid(rho=50, theta=th), residual_stride=None)
            for th in (0.0, math.pi / 4)}


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
