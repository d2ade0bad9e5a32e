import contextlib
import time

import pytest

_RESULTS: dict[int, tuple[str, str, str]] = {}


class _Recorder:
    @contextlib.contextmanager
    def criterion(self, number: int, name: str):
        """Record PASS/FAIL for one acceptance criterion; failures still raise."""
        start = time.perf_counter()
        try:
            yield
        except BaseException:
            _RESULTS[number] = ("FAIL", name, f"{time.perf_counter() - start:.1f}s")
            raise
        _RESULTS[number] = ("PASS", name, f"{time.perf_counter() - start:.1f}s")


@pytest.fixture
def acceptance():
    return _Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        status, name, elapsed = _RESULTS[number]
        terminalreporter.write_line(f"[{status}] criterion {number:2d}: {name} ({elapsed})")
