import itertools

import numpy as np
import pytest

from boolfact.boolmat import BooleanMatrix
from boolfact.reduce import WeightedInstance

# worked 3x3 access-control example: rooms per worker, two roles
EXAMPLE_X = [[1, 1, 0], [1, 1, 1], [0, 1, 1]]
EXAMPLE_C = [[1, 0], [1, 1], [0, 1]]
EXAMPLE_R = [[1, 1, 0], [0, 1, 1]]


@pytest.fixture
def example_matrix():
    return BooleanMatrix(EXAMPLE_X)


def random_weighted_instance(rng, n_range=(2, 5), m_range=(2, 5), weights=(1, 2, 3)):
    n = int(rng.integers(n_range[0], n_range[1] + 1))
    m = int(rng.integers(m_range[0], m_range[1] + 1))
    X = rng.integers(0, 2, size=(n, m))
    if not X.any():
        X[rng.integers(n), rng.integers(m)] = 1
    alpha = rng.choice(weights, size=n)
    beta = rng.choice(weights, size=m)
    return WeightedInstance.weighted(BooleanMatrix(X), alpha, beta)


def naive_optimum(X, k, alpha=None, beta=None):
    """Plain-Python enumeration of every (C, R) pair; independent of the package solvers."""
    X = [list(r) for r in np.asarray(X).tolist()]
    n, m = len(X), len(X[0])
    alpha = [1] * n if alpha is None else list(alpha)
    beta = [1] * m if beta is None else list(beta)
    best = None
    for cbits in itertools.product((0, 1), repeat=n * k):
        for rbits in itertools.product((0, 1), repeat=k * m):
            err = 0
            for i in range(n):
                for j in range(m):
                    z = any(cbits[i * k + l] and rbits[l * m + j] for l in range(k))
                    if z != X[i][j]:
                        err += alpha[i] * beta[j]
            if best is None or err < best:
                best = err
    return best


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
