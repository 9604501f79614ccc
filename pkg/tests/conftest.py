import re
import sys

import pytest

if hasattr(sys, "set_int_max_str_digits"):
    sys.set_int_max_str_digits(0)

_CRITERION = re.compile(r"test_criterion_(\d+)_")
_outcomes: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = _CRITERION.match(item.name)
    if not m:
        return
    key = int(m.group(1))
    if report.when == "call" or report.failed:
        prev = _outcomes.get(key, True)
        _outcomes[key] = prev and not report.failed


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_outcomes):
        terminalreporter.write_line(f"criterion {key}: {'PASS' if _outcomes[key] else 'FAIL'}")
