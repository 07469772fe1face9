"""Shared pytest wiring for the suite.

The acceptance tests record one verdict line per criterion; the hook below
echoes those lines through the terminal reporter so they show up in the run
summary even under default output capture.
"""

acceptance_lines = []


def pytest_terminal_summary(terminalreporter):
    if not acceptance_lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_lines:
        terminalreporter.write_line(line)
