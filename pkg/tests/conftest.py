import time

import pytest

SESSION_START = time.monotonic()
_acceptance = {}
DETAILS = {}  # criterion number -> detail line written by the test


def pytest_collection_modifyitems(config, items):
    # acceptance checks run last so the runtime criterion sees the whole suite
    items.sort(key=lambda item: item.get_closest_marker("acceptance") is not None)


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number): numbered acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    number = getattr(report, "acceptance", None)
    if number is not None:
        _acceptance[number] = (report.outcome == "passed", report.nodeid)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        outcome.get_result().acceptance = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_acceptance):
        ok, nodeid = _acceptance[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {nodeid}")
        if number in DETAILS:
            terminalreporter.write_line(f"    {DETAILS[number]}")
