import pytest

from acceptance_log import LINES


def pytest_terminal_summary(terminalreporter):
    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def report(capsys):
    """Print one line immediately (bypassing capture) and keep it for the summary."""

    def emit(line):
        LINES.append(line)
        with capsys.disabled():
            print("\n    " + line, end="")

    return emit
