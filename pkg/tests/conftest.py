import pytest

from dualgrid.scenario import run_builtin

# lines printed by the acceptance suite, repeated in the terminal summary
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def disturbance_result():
    return run_builtin("disturbance", plot=False)


@pytest.fixture(scope="session")
def cc_step_result():
    return run_builtin("cc_step", plot=False)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
