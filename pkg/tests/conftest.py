# Collected acceptance results: {criterion number: (label, passed, detail)}
ACCEPTANCE_RESULTS = {}


def record_acceptance(number, label, passed, detail=""):
    ACCEPTANCE_RESULTS[number] = (label, bool(passed), detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        label, passed, detail = ACCEPTANCE_RESULTS[num]
        status = "PASS" if passed else "FAIL"
        line = f"criterion {num} [{status}] {label}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)
