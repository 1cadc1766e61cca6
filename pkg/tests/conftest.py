import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_call(item):
    mark = item.get_closest_marker("acceptance")
    start = time.perf_counter()
    outcome = yield
    if mark is not None:
        elapsed = time.perf_counter() - start
        number, title = mark.args[:2]
        budget = mark.kwargs.get("budget")
        ok = outcome.excinfo is None
        if ok and budget is not None and elapsed >= budget:
            ok = False
            outcome.force_exception(AssertionError(f"took {elapsed:.2f}s, budget {budget}s"))
        if number in _results:  # parametrized criterion: every case must pass
            _, prev_ok, prev_elapsed, _ = _results[number]
            ok, elapsed = ok and prev_ok, elapsed + prev_elapsed
        _results[number] = (title, ok, elapsed, budget)


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_results):
        title, ok, elapsed, budget = _results[number]
        terminalreporter.write_line(
            f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title} ({elapsed:.2f}s / budget {budget}s)")
