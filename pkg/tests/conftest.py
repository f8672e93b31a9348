"""Prints one pass/fail line per acceptance criterion after the run."""

import pytest

_criteria = {}
_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(number, label): acceptance criterion identity"
    )


def pytest_collection_modifyitems(items):
    for item in items:
        marker = item.get_closest_marker("criterion")
        if marker is not None:
            _criteria[item.nodeid] = (marker.args[0], marker.args[1])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if item.nodeid in _criteria and report.when == "call":
        _outcomes[item.nodeid] = report.passed


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, (number, label) in sorted(_criteria.items(), key=lambda kv: kv[1][0]):
        if nodeid in _outcomes:
            status = "PASS" if _outcomes[nodeid] else "FAIL"
        else:
            status = "NOT RUN"
        terminalreporter.write_line(f"criterion {number} ({label}): {status}")
