import pytest

from csgbench.core import coalition
from csgbench.genmodel import SynergyModel

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def two_templates():
    """n=4, templates {0,1} (w=3) and {2,3} (w=2), noiseless."""
    return SynergyModel(4, (coalition([0, 1]), coalition([2, 3])), (3.0, 2.0), 0.0, 7)
