import numpy as np
import pytest
from hypothesis import settings

from heisqc.conformal_maps import default_calibration
from heisqc.sphere_measures import QuadSpec

settings.register_profile("heisqc", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("heisqc")


@pytest.fixture(scope="session")
def quad():
    return QuadSpec()


@pytest.fixture(scope="session")
def calib():
    return default_calibration()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)
