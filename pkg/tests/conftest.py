import pytest

_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line for the acceptance summary."""

    def record(label: str, checks: dict, detail: str = "") -> bool:
        ok = all(checks.values())
        failed = [k for k, v in checks.items() if not v]
        line = f"{'PASS' if ok else 'FAIL'}  {label}"
        if failed:
            line += f"  [failed: {', '.join(failed)}]"
        if detail:
            line += f"  ({detail})"
        _LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
