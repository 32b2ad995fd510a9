"""Collects acceptance verdicts and prints them as one block at the end of the run."""

VERDICTS = []


def record(number, name, ok, detail=""):
    VERDICTS.append((number, name, bool(ok), detail))


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, ok, detail in sorted(VERDICTS):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  [{number:2d}] {name}: {detail}")
