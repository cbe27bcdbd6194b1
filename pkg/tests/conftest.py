import sys


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if acceptance and acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acceptance.RESULTS:
            terminalreporter.write_line(line)
