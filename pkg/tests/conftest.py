# filled by test_acceptance.report(); echoed after the run so the verdicts are visible under capture
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].lstrip("C"))):
            terminalreporter.write_line(line)
