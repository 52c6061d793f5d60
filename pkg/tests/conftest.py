"""Acceptance bookkeeping: one PASS/FAIL line per criterion in the terminal summary."""
from collections import defaultdict

import pytest

_RESULTS = defaultdict(lambda: {"title": "", "passed": 0, "failed": 0, "xfailed": 0, "notes": []})


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _RESULTS[number]
    entry["title"] = title
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        if hasattr(report, "wasxfail"):
            entry["xfailed"] += 1
            entry["notes"].append(report.wasxfail)
        elif report.passed:
            entry["passed"] += 1
        else:
            entry["failed"] += 1


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        e = _RESULTS[number]
        ok = e["failed"] == 0 and e["xfailed"] == 0 and e["passed"] > 0
        counts = f"{e['passed']} passed"
        if e["failed"]:
            counts += f", {e['failed']} failed"
        if e["xfailed"]:
            counts += f", {e['xfailed']} unattainable"
        line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {e['title']} ({counts})"
        terminalreporter.write_line(line)
        for note in sorted(set(e["notes"])):
            terminalreporter.write_line(f"    {note}")
