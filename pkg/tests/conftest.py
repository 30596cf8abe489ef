import numpy as np
import pytest

from detrev.scenarios import spin_system

# filled by test_acceptance.py, printed at the end of the session
ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20081015)


@pytest.fixture
def spin():
    return spin_system(omega=1.0, hbar=1.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
