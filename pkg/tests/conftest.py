import math

import numpy as np
import pytest

from rkmor.benchmarks import random_stable_system
from rkmor.system import LtiSystem, transfer_function


@pytest.fixture
def scalar_sys():
    return LtiSystem([[-1.0]], [1.0], [1.0])


@pytest.fixture
def diag2():
    return LtiSystem(np.diag([-1.0, -2.0]), [1.0, 1.0], [1.0, 1.0])


@pytest.fixture
def rand_sys():
    return random_stable_system(12, seed=3)


def fd_moment(sys, s0, j, h=1e-4):
    """Taylor coefficient ``G^(j)(s0) / j!`` by central differences."""
    if j == 0:
        return transfer_function(sys, s0)
    # j-th central difference, step h
    acc = 0.0
    for k in range(j + 1):
        acc += (-1) ** k * math.comb(j, k) * transfer_function(sys, s0 + (j / 2 - k) * h)
    return acc / (math.factorial(j) * h**j)


def rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
