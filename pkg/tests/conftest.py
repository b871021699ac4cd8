import time

import pytest

_CRITERIA = {}
_RUNTIME_LIMIT = 120.0
_START = time.perf_counter()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    label = getattr(item.function, "criterion", None)
    if label is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA[label] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERIA, key=lambda s: int(s.split(".")[0])):
        verdict = "PASS" if _CRITERIA[label] == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {label}")
    elapsed = time.perf_counter() - _START
    verdict = "PASS" if elapsed < _RUNTIME_LIMIT else "FAIL"
    terminalreporter.write_line(f"{verdict}  14. session runtime {elapsed:.1f} s (limit {_RUNTIME_LIMIT:.0f} s)")


def criterion(label):
    """Tag an acceptance test so its outcome is listed in the summary."""

    def mark(fn):
        fn.criterion = label
        return fn

    return mark
