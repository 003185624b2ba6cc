import re

import pytest

# criterion id -> (passed, detail), filled by test_acceptance
ACCEPTANCE: dict = {}


@pytest.fixture
def record():
    def _record(cid, passed, detail=""):
        ACCEPTANCE[cid] = (bool(passed), detail)
        print(f"criterion {cid}: {'PASS' if passed else 'FAIL'} {detail}")
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: (int(re.match(r"\d+", c).group()), c)):
        ok, detail = ACCEPTANCE[cid]
        terminalreporter.write_line(f"criterion {cid}: {'PASS' if ok else 'FAIL'} {detail}")
