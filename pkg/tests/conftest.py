import pytest

_ACCEPTANCE_LINES: dict[int, str] = {}


class AcceptanceReport:
    def record(self, number: int, passed: bool, detail: str) -> bool:
        status = "PASS" if passed else "FAIL"
        line = f"criterion {number:>2}: {status}  {detail}"
        _ACCEPTANCE_LINES[number] = line
        print(line)
        return passed


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceReport()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE_LINES):
        terminalreporter.write_line(_ACCEPTANCE_LINES[number])
