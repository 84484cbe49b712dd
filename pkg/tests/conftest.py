import pytest

_LINES: dict[str, str] = {}


@pytest.fixture
def criterion(request):
    """Record the verdict of one acceptance criterion and assert it."""

    def record(number: int, title: str, ok: bool, detail: str = "") -> None:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}"
        if detail:
            line += f" | {detail}"
        _LINES[request.node.nodeid] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_LINES.values(), key=lambda s: s.split("criterion ")[1]):
        terminalreporter.write_line(line)
