import time
from contextlib import contextmanager

import pytest

_RESULTS = {}


@pytest.fixture
def criterion():
    """Context manager recording a PASS/FAIL line for an acceptance criterion."""

    @contextmanager
    def record(number: int, title: str, budget_s: float):
        start = time.perf_counter()
        try:
            yield
        except BaseException as exc:
            elapsed = time.perf_counter() - start
            _RESULTS[number] = ("FAIL", title, elapsed, budget_s, f"{type(exc).__name__}: {exc}".splitlines()[0])
            raise
        elapsed = time.perf_counter() - start
        if elapsed > budget_s:
            _RESULTS[number] = ("FAIL", title, elapsed, budget_s, "runtime budget exceeded")
            pytest.fail(f"criterion {number} took {elapsed:.2f}s, budget {budget_s}s")
        _RESULTS[number] = ("PASS", title, elapsed, budget_s, "")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        status, title, elapsed, budget, note = _RESULTS[number]
        line = f"criterion {number:2d}: {status}  {title}  ({elapsed:.2f}s / {budget:g}s)"
        if note:
            line += f"  [{note}]"
        terminalreporter.write_line(line)
