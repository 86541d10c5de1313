import pytest

_CRITERIA: dict = {}


@pytest.fixture(scope="session")
def record_criterion():
    """Store one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""

    def record(number: int, passed: bool, detail: str, elapsed: float) -> None:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  ({elapsed:.1f} s)  {detail}"
        _CRITERIA[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.write_sep("=", "acceptance criteria")
        for n in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[n])
