"""Shared test plumbing: the acceptance-criteria summary table."""

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(criterion: str, passed: bool, detail: str):
    verdict = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES.append(f"{verdict}  {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
