import contextlib

import pytest

_RESULTS = {}


@pytest.fixture
def acceptance():
    """Record the outcome of one acceptance criterion (parts combine with AND)."""

    @contextlib.contextmanager
    def record(number, title):
        ok = False
        try:
            yield
            ok = True
        finally:
            prev = _RESULTS.get(number, (title, True))
            _RESULTS[number] = (prev[0], prev[1] and ok)
            print(f"criterion {number} ({title}): {'PASS' if ok else 'FAIL'}")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, ok = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}")
