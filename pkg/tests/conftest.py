import time

import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")
    config.addinivalue_line("markers", "slow: oracle solves taking more than a few seconds")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": True, "tests": [], "seen": False})
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        entry["seen"] = True
        entry["tests"].append((item.name, report.outcome))
        if report.outcome != "passed":
            entry["passed"] = False


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "PASS" if entry["passed"] and entry["seen"] else "FAIL"
        failing = [name for name, outcome in entry["tests"] if outcome != "passed"]
        extra = f"  (failing: {', '.join(failing)})" if failing else ""
        terminalreporter.write_line(f"criterion {number:>2} {status}  {entry['title']}{extra}")


@pytest.fixture
def timer():
    """Context-free stopwatch: ``with timer() as t: ...; t.elapsed``."""

    class _Timer:
        def __enter__(self):
            self.start = time.perf_counter()
            return self

        def __exit__(self, *exc):
            self.elapsed = time.perf_counter() - self.start
            return False

    return _Timer

