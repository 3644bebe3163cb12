from collections import defaultdict

# criterion -> list of (label, passed, detail), filled by test_acceptance.py
ACCEPTANCE = defaultdict(list)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE, key=int):
        parts = ACCEPTANCE[crit]
        verdict = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        detail = "; ".join(f"{label}{'' if ok else ' [FAIL]'}: {d}" if label else d for label, ok, d in parts)
        terminalreporter.write_line(f"{verdict} criterion {crit}: {detail}")
