import os

import pytest

SLOW_ENV = "DIFFWILLMORE_SLOW"


def pytest_configure(config):
    config.addinivalue_line("markers", f"slow: long runs, enabled with {SLOW_ENV}=1")


def pytest_collection_modifyitems(config, items):
    if os.environ.get(SLOW_ENV) == "1":
        return
    skip = pytest.mark.skip(reason=f"long run; set {SLOW_ENV}=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


# one PASS/FAIL line per acceptance criterion, collected from the test reports
_criteria = {}


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    if report.when == "call" or report.outcome != "passed":
        state = _criteria.setdefault(crit, {"passed": True, "skipped": False, "notes": []})
        if report.skipped:
            state["skipped"] = True
        elif report.failed:
            state["passed"] = False
            state["notes"].append(report.nodeid.split("::")[-1])


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_criteria, key=lambda c: (len(c), c)):
        state = _criteria[crit]
        verdict = "SKIP" if state["skipped"] and state["passed"] else ("PASS" if state["passed"] else "FAIL")
        extra = f"  ({', '.join(state['notes'])})" if state["notes"] else ""
        terminalreporter.write_line(f"criterion {crit}: {verdict}{extra}")
