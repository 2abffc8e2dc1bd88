import pytest

_LINES: dict[int, str] = {}


@pytest.fixture
def report():
    """Record the outcome line of an acceptance criterion."""

    def record(criterion: int, ok: bool, detail: str) -> bool:
        _LINES[criterion] = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}"
        print(_LINES[criterion])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_LINES):
        terminalreporter.write_line(_LINES[key])
