import time

import pytest

_RESULTS: dict[int, tuple[bool, str, str]] = {}


class Criterion:
    """Context manager that times a check and records its verdict."""

    def __init__(self, number: int, title: str, budget_s: float | None = None):
        self.number = number
        self.title = title
        self.budget_s = budget_s
        self.details: list[str] = []
        self.ok = True

    def check(self, ok: bool, detail: str) -> None:
        self.details.append(("" if ok else "FAILED ") + detail)
        self.ok &= bool(ok)

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self.start
        if exc_type is not None and exc_type is not AssertionError:
            self.check(False, f"raised {exc_type.__name__}: {exc}")
        if self.budget_s is not None:
            self.check(elapsed < self.budget_s, f"runtime {elapsed:.1f}s (limit {self.budget_s:g}s)")
        _RESULTS[self.number] = (self.ok, self.title, "; ".join(self.details))
        return False

    def conclude(self) -> None:
        assert self.ok, "; ".join(self.details)


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        ok, title, detail = _RESULTS[number]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}")
