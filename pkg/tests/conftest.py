import numpy as np
import pytest

from freeness.kernels import FreeState, Statistics, validate_kernel

SYM_HALF = [[0.5, 0.5], [0.5, 0.5]]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def half_projection():
    """One fermion in the symmetric orbital (1, 1)/sqrt(2) on two sites."""
    return FreeState.from_matrix(SYM_HALF, "fermi")


@pytest.fixture
def bose_pair():
    return FreeState.from_matrix([[1.0, 0.5], [0.5, 1.0]], "bose")


def state(entries, statistics):
    return FreeState(Statistics.parse(statistics), validate_kernel(entries, statistics))


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
