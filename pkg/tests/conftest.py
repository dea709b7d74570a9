import pytest

# One line per acceptance criterion, printed after the run so the
# verdicts are visible even when pytest captures test output.
_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_report():
    def record(criterion: str, passed: bool, detail: str):
        verdict = "PASS" if passed else "FAIL"
        _ACCEPTANCE_LINES.append(f"{verdict}  {criterion}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
