import pytest

_RESULTS: dict[int, tuple[bool, str]] = {}


class AcceptanceLog:
    """Collects one pass/fail line per acceptance criterion."""

    def record(self, number: int, passed: bool, detail: str) -> None:
        _RESULTS[number] = (passed, detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")


@pytest.fixture
def acceptance_log() -> AcceptanceLog:
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        passed, detail = _RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} {detail}")
