import os
import re
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("repo", derandomize=True, deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

AC_LINES = []


@pytest.fixture
def ac_report():
    def report(label, ok, detail=""):
        line = f"{label} {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        AC_LINES.append(line)
        print(line)
        return ok
    return report


def _order(line):
    m = re.match(r"AC-(\d+)", line)
    return (int(m.group(1)) if m else 99, line)


def pytest_terminal_summary(terminalreporter):
    if AC_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(AC_LINES, key=_order):
            terminalreporter.write_line(line)
