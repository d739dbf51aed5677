import numpy as np
import pytest

from proxal.consensus import build_consensus_problem, fig2_plant
from proxal.problem import CompositeProblem, LinearMap, least_squares
from proxal.regularizers import L1


def make_lasso(n=10, rows=20, seed=0, frac=0.1):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((rows, n))
    x_true = np.zeros(n)
    x_true[:3] = rng.standard_normal(3)
    b = A @ x_true + 0.01 * rng.standard_normal(rows)
    gamma = frac * np.abs(A.T @ b).max()
    p = CompositeProblem(least_squares(A, b), L1(gamma), LinearMap.identity(n))
    return A, b, gamma, p


@pytest.fixture
def lasso():
    return make_lasso()


@pytest.fixture(scope="session")
def fig2_cp():
    return build_consensus_problem(fig2_plant())


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(RESULTS):
        for line in RESULTS[key]:
            terminalreporter.write_line(line)
