# acceptance verdicts collected during the run, echoed in the terminal summary
VERDICTS = []


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for v in sorted(VERDICTS, key=lambda v: int(v.key)):
        terminalreporter.write_line(v.line())
