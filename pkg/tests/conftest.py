import pytest

from cknstab.grid import experiment_grid
from cknstab.params import make_params

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def sobolev():
    return make_params(3, 0, 0)


@pytest.fixture(scope="session")
def sobolev_grid(sobolev):
    return experiment_grid(sobolev, h=0.01)


@pytest.fixture(scope="session")
def power():
    return make_params(4, 0, 0.5)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
