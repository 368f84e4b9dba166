"""Collects the one-line verdicts of the acceptance checks and prints them at the end of the run."""

import pytest

VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record a summary line; the lines are printed after all tests finish."""
    return VERDICTS.append


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
