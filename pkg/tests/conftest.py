import numpy as np
import pytest

from wdist.core import uniform_measure
from wdist.rng import make_rng

INSTANCE_SEED = 2024


def uniform_instances(count=50, seed=INSTANCE_SEED):
    """Square cost matrices with entries uniform in [0, 1], sizes cycling 2..6."""
    rng = make_rng(seed, "uniform-instances")
    return [rng.random((2 + k % 5, 2 + k % 5)) for k in range(count)]


def measures(C):
    n, m = np.shape(C)
    return uniform_measure(n), uniform_measure(m)


@pytest.fixture(scope="session")
def instances():
    return uniform_instances()


@pytest.fixture
def fixture5():
    return make_rng(7, "fixture-5x5").random((5, 5))


ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail):
    """Remember one pass/fail line for the acceptance summary and echo it."""
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
