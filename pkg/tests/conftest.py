import pytest

# criterion number -> (passed, detail); filled by the acceptance suite
ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record one acceptance line, print it, and fail the test if it did not pass."""

    def record(number: int, passed: bool, detail: str) -> None:
        ACCEPTANCE[number] = (bool(passed), detail)
        print(f"\n[acceptance {number:2d}] {'PASS' if passed else 'FAIL'}: {detail}")
        assert passed, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
