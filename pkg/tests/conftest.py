import itertools

import numpy as np
import pytest

from qubo_svm.datasets import SvmDataset
from qubo_svm.qubo import QuboInstance


def random_instance(n, seed, low=-1.0, high=1.0):
    rng = np.random.default_rng(seed)
    return QuboInstance.from_upper(np.triu(rng.uniform(low, high, (n, n))))


def all_assignments(n):
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.uint8)


def random_dataset(n, d, seed):
    rng = np.random.default_rng(seed)
    y = np.where(rng.random(n) < 0.5, 1, -1)
    y[0], y[1] = 1, -1
    x = rng.normal(size=(n, d)) + 0.8 * y[:, None]
    return SvmDataset(x, y, name=f"random{seed}")


@pytest.fixture
def toy():
    """Two points per class on either side of the diagonal direction (1, 1)."""
    x = np.array([[1.0, 1.0], [2.0, 1.0], [-1.0, -1.0], [-1.0, -2.0]])
    y = np.array([1, 1, -1, -1])
    return SvmDataset(x, y, name="toy")


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
