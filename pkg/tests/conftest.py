"""Acceptance reporting: one PASS/FAIL line per criterion in the summary.

Tests tagged ``@pytest.mark.criterion(id, title)`` are grouped by ``id``; a
criterion passes only when every tagged test passes. Values stored with
``record_property`` are echoed next to the line.
"""
from collections import OrderedDict

import pytest

_RESULTS = OrderedDict()


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_setup(item):
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        item.user_properties.append(("criterion", mark.args))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    if "criterion" not in props:
        return
    if report.when == "call" or report.outcome != "passed":
        cid, title = props["criterion"]
        entry = _RESULTS.setdefault(cid, {"title": title, "failed": [], "values": []})
        name = report.nodeid.rsplit("::", 1)[-1]
        if report.outcome != "passed":
            entry["failed"].append(name)
        entry["values"].extend(f"{k}={v}" for k, v in report.user_properties
                               if k != "criterion")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for cid, entry in _RESULTS.items():
        status = "FAIL" if entry["failed"] else "PASS"
        line = f"[{status}] criterion {cid}: {entry['title']}"
        if entry["failed"]:
            line += f"  (failed: {', '.join(entry['failed'])})"
        terminalreporter.write_line(line)
        if entry["values"]:
            terminalreporter.write_line("         " + "; ".join(entry["values"]))
