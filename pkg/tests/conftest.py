import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_pair(rng, n, p1=3, p2=2):
    """Two correlated random point clouds with aligned rows."""
    Z = rng.standard_normal((n, max(p1, p2)))
    X1 = Z[:, :p1] + 0.1 * rng.standard_normal((n, p1))
    X2 = Z[:, :p2] ** 2 + 0.1 * rng.standard_normal((n, p2))
    return X1, X2


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
