import numpy as np
import pytest
from hypothesis import settings

from hessdamp.problems import quadratic, random_spd

settings.register_profile("default", max_examples=100, deadline=None)
settings.load_profile("default")


@pytest.fixture
def spd_quadratic():
    """10-dimensional quadratic with spectrum in [1, 10], so L = 10 exactly."""
    return quadratic(random_spd(10, 1.0, 10.0, seed=0))


@pytest.fixture
def half_norm_sq():
    return quadratic(np.eye(3))


ACCEPTANCE_LINES: list = []


@pytest.fixture
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
