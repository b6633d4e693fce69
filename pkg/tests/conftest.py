import re

_outcomes = {}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)_", report.nodeid)
    if not m:
        return
    number = int(m.group(1))
    if report.failed:
        _outcomes[number] = "FAIL"
    elif report.when == "call" and number not in _outcomes:
        _outcomes[number] = "PASS"


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    from test_acceptance import CRITERIA

    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        terminalreporter.write_line(f"criterion {number}: {_outcomes[number]}  {CRITERIA[number]}")
