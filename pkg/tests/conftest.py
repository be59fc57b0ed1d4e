import numpy as np
import pytest

from gaborprop.core import GridSpec, make_gaussian_window

ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def small_grid():
    return GridSpec(256, 16.0)


@pytest.fixture(scope="session")
def wf_grid():
    return GridSpec(65536, 256.0)


@pytest.fixture(scope="session")
def wf_window(wf_grid):
    return make_gaussian_window(wf_grid)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
