import numpy as np
import pytest

from roughfbm import FbmModel, FrequencyGrid, sample_fbm

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_path():
    """Two-component sampled path on a 32-mode grid."""
    return sample_fbm(FbmModel(0.3, 1e-3, 2), FrequencyGrid(32), seed=7)
