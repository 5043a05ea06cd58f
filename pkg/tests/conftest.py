import pytest

_GATE: dict[int, str] = {}


@pytest.fixture
def gate():
    """Record one acceptance line per criterion; printed in the terminal summary."""
    def record(number: int, ok: bool, text: str) -> bool:
        _GATE[number] = f"{'PASS' if ok else 'FAIL'}  criterion {number:>2}: {text}"
        print(_GATE[number])
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _GATE:
        return
    terminalreporter.section("acceptance gate")
    for n in sorted(_GATE):
        terminalreporter.write_line(_GATE[n])
