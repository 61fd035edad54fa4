import pytest

from robcons import networks
from robcons.networks import grid_id


@pytest.fixture(scope="session")
def grid():
    return networks.grid3x3().to_petri_net()


@pytest.fixture(scope="session")
def chain():
    return networks.chain3().to_petri_net()


@pytest.fixture(scope="session")
def ring():
    return networks.ring5().to_petri_net()


def g(*coords):
    """Grid agent ids from 1-based (row, col) pairs."""
    return {grid_id(r, c) for r, c in coords}


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
