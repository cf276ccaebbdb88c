import pytest

# acceptance results, filled in by test_acceptance.criterion
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        status, line = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{status}] {n:>2}. {line}")


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE
