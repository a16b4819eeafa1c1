import re

_CRITERION = re.compile(r"test_acceptance\.py::test_(A\d+)_")
_outcomes: dict[str, str] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if m is None:
        return
    key = m.group(1)
    if report.failed:
        _outcomes[key] = "FAIL"
    elif report.when == "call" and report.passed:
        _outcomes.setdefault(key, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance")
    for key in sorted(_outcomes, key=lambda k: int(k[1:])):
        terminalreporter.write_line(f"{key} {_outcomes[key]}")
