import pytest

from cotunnel.model import ModelParams

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def default_params():
    return ModelParams(E_L=-2.0, delta_L=0.5, delta_R=1.0, U=3.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
