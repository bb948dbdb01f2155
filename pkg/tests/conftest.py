import pytest

# criterion number -> (passed, one-line detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def acceptance_report():
    def record(number: int, passed: bool, detail: str) -> None:
        ACCEPTANCE[number] = (passed, detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")
