import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
PROGRAMS = TESTS / "programs"

sys.path.insert(0, str(TESTS))

# filled by test_acceptance, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def programs() -> Path:
    return PROGRAMS


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
