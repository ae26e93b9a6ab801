import pytest

NUM_CRITERIA = 14
CRITERIA: dict = {}


@pytest.fixture
def criterion():
    """record(n, ok, detail): one pass/fail line per acceptance criterion."""
    def record(n, ok, detail):
        CRITERIA[n] = (bool(ok), detail)
        print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return bool(ok)
    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, NUM_CRITERIA + 1):
        if n in CRITERIA:
            ok, detail = CRITERIA[n]
            terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            terminalreporter.write_line(f"criterion {n:2d}: NOT RUN")
