import hypothesis
import pytest

hypothesis.settings.register_profile("repro", derandomize=True, deadline=None)
hypothesis.settings.load_profile("repro")

_summary_lines: list[str] = []


@pytest.fixture(scope="session")
def summary_line():
    """Queue a line for the end-of-run terminal summary."""
    return _summary_lines.append


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _summary_lines:
        terminalreporter.section("acceptance criteria")
        for line in _summary_lines:
            terminalreporter.write_line(line)
