import pytest

# filled by the acceptance tests; printed once at the end of the session
ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance_report():
    def report(number, title, ok, detail=""):
        ACCEPTANCE_LINES[number] = f"criterion {number} {title}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        print(ACCEPTANCE_LINES[number])
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
