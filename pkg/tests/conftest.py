import numpy as np
import pytest

from brownmap.domain import auto_window_D, limit_ratio
from brownmap.measure import SpectralMeasure

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def bernoulli():
    return SpectralMeasure.bernoulli()


@pytest.fixture(scope="session")
def two_point():
    return SpectralMeasure.atomic([-2.0, 2.0], [0.5, 0.5])


@pytest.fixture(scope="session")
def uniform():
    return SpectralMeasure.uniform()


@pytest.fixture(scope="session")
def uniform_small():
    return SpectralMeasure.uniform(n_nodes=201)


def rng(seed=0):
    return np.random.Generator(np.random.PCG64(seed))


def sample_D(m, p, n, gen, inside=True, window=None):
    """Rejection sample of points inside (or outside) D, via limit_ratio."""
    x0, x1, y0, y1 = window or auto_window_D(m, p)
    out = []
    count = 0
    while count < n:
        z = gen.uniform(x0, x1, 4 * n) + 1j * gen.uniform(y0, y1, 4 * n)
        lr = limit_ratio(m, p, z)
        keep = lr < -1e-6 if inside else lr > 1e-6
        out.append(z[keep])
        count += keep.sum()
    return np.concatenate(out)[:n]
