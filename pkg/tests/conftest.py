"""Collects acceptance-criterion outcomes and prints one line per criterion."""
import pytest

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if report.when != "call" and report.passed:
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "ok": True, "details": []})
    entry["ok"] = entry["ok"] and report.passed
    details = [str(v) for k, v in item.user_properties if k == "detail"]
    if report.failed:
        details.append(f"{report.when} failed: {report.longrepr.reprcrash.message if hasattr(report.longrepr, 'reprcrash') else report.longrepr}")
    entry["details"].extend(details)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        c = _CRITERIA[number]
        status = "PASS" if c["ok"] else "FAIL"
        detail = "; ".join(c["details"])
        tr.write_line(f"AC{number:02d} {status} {c['title']}" + (f" | {detail}" if detail else ""))
