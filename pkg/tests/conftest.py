import numpy as np
import pytest

STAR_EDGES = """\
# star on node 1 plus a unit self-loop on node 2
1 2 1
1 3 1
1 4 1
2 2 1
"""

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def star_adjacency():
    return np.array([[0.0, 1, 1, 1], [1, 1, 0, 0], [1, 0, 0, 0], [1, 0, 0, 0]])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_symmetric(rng, n, radius=0.9):
    """Symmetric matrix with spectral radius ``radius`` and a simple spectrum."""
    X = rng.standard_normal((n, n))
    A = X + X.T
    return radius * A / np.max(np.abs(np.linalg.eigvalsh(A)))


def symmetric_with_spectrum(rng, lam):
    Q, _ = np.linalg.qr(rng.standard_normal((len(lam), len(lam))))
    return Q @ np.diag(lam) @ Q.T


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
