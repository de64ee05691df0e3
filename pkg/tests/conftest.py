import sys

ORDER = ["1", "2", "3", "4", "5", "5r", "6", "7", "8", "9", "10", "11", "12"]
LABELS = {"5r": "5 (companion, constant 7/12)"}


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in ORDER:
        if key in results:
            ok, detail = results[key]
            terminalreporter.write_line(f"ACCEPTANCE {LABELS.get(key, key)}: {'PASS' if ok else 'FAIL'} - {detail}")
        else:
            terminalreporter.write_line(f"ACCEPTANCE {LABELS.get(key, key)}: NOT RUN")
