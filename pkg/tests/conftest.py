import numpy as np
import pytest
from hypothesis import settings

from paracascade.fourier_core import Grid2D
from paracascade.harness.data import powerlaw_field

settings.register_profile("pkg", deadline=None, max_examples=15, derandomize=True)
settings.load_profile("pkg")


@pytest.fixture(scope="session")
def grid32():
    return Grid2D(32)


@pytest.fixture(scope="session")
def grid64():
    return Grid2D(64)


@pytest.fixture(scope="session")
def grid128():
    return Grid2D(128)


def random_field(grid, seed, s=1.5, amplitude=1.0):
    return powerlaw_field(grid, s, seed, amplitude)


def random_physical(grid, seed):
    return np.random.default_rng(seed).standard_normal(grid.shape)


ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion."""
    def record(number, title, ok, detail):
        line = f"criterion {number} {title}: {'PASS' if ok else 'FAIL'} ({detail})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
