import sys
from pathlib import Path

import pytest

# Make the sibling oracle/factory helpers importable from every test module.
sys.path.insert(0, str(Path(__file__).resolve().parent))

_criterion_lines = []


@pytest.fixture
def criterion_report():
    """Record one acceptance-criterion verdict, then assert it.

    The line is echoed immediately (visible with -s or on failure) and
    replayed in a terminal-summary section after capture ends, so every run
    log carries one PASS/FAIL line per criterion.
    """

    def _report(n, checks, detail):
        failed = [name for name, ok in checks.items() if not ok]
        verdict = "PASS" if not failed else "FAIL"
        line = f"criterion {n}: {verdict} ({detail})"
        if failed:
            line += f" failed={failed}"
        _criterion_lines.append(line)
        print(line)
        assert not failed, line

    return _report


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)
