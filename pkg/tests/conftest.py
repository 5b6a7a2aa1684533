import pytest

_CRITERIA: dict = {}  # number -> {"title": str, "parts": [(test name, passed, detail)]}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion covered by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    if report.failed and not detail:
        detail = str(call.excinfo.value).splitlines()[0] if call.excinfo else "failed"
    entry = _CRITERIA.setdefault(number, {"title": title, "parts": []})
    entry["parts"].append((item.name, report.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        ok = all(passed for _, passed, _ in entry["parts"])
        terminalreporter.write_line(f"criterion {number} [{'PASS' if ok else 'FAIL'}] {entry['title']}")
        for name, passed, detail in entry["parts"]:
            terminalreporter.write_line(f"    {'ok  ' if passed else 'FAIL'} {name}: {detail}")
