"""Shared test infrastructure: the acceptance-criteria report.

Acceptance tests record one line per criterion; the terminal summary prints
them all so every run shows an explicit pass/fail verdict per criterion.
"""

_CRITERION_LINES = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    verdict = "PASS" if passed else "FAIL"
    _CRITERION_LINES[number] = f"CRITERION {number}: {verdict} - {detail}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERION_LINES):
        terminalreporter.write_line(_CRITERION_LINES[number])
