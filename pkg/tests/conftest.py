import pytest

CRITERION_LINES = []


@pytest.fixture
def report_criterion():
    def report(c):
        line = c.line()
        CRITERION_LINES.append(line)
        print(line)
        return c
    return report


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(CRITERION_LINES, key=lambda s: int(s.split(".")[0].split()[-1])):
            terminalreporter.write_line(line)
