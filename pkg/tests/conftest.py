import os
import sys

import pytest

# lets test modules import the golden-schema helper next to them
sys.path.insert(0, os.path.dirname(__file__))

_criteria: dict[str, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.name.startswith("test_criterion_"):
        rep.criterion_title = (item.function.__doc__ or "").strip().splitlines()[0]


def pytest_runtest_logreport(report):
    title = getattr(report, "criterion_title", None)
    if title is None:
        return
    number = report.nodeid.rsplit("test_criterion_", 1)[1].split("_", 1)[0]
    failed = report.failed or (report.when == "call" and not report.passed)
    if report.when == "call" or failed:
        prev = _criteria.get(number, ("PASS", title))[0]
        _criteria[number] = ("FAIL" if failed or prev == "FAIL" else "PASS", title)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria, key=int):
        status, title = _criteria[number]
        terminalreporter.write_line(f"criterion {int(number)}: {status} - {title}")
