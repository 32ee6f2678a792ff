from __future__ import annotations

import sys


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance criteria with PASS/FAIL lines")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
