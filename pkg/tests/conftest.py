"""Collects one verdict per acceptance criterion and prints them after the run."""

ACCEPTANCE = {}
CRITERIA = range(1, 13)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in CRITERIA:
        if n not in ACCEPTANCE:
            tr.write_line(f"criterion {n:2d}: NOT RUN")
            continue
        ok, detail = ACCEPTANCE[n]
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
