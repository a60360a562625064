from collections import OrderedDict

import pytest

# criterion id -> list of (check, passed, detail)
_ACCEPTANCE: "OrderedDict[int, list]" = OrderedDict()


class Recorder:
    def __call__(self, criterion: int, check: str, passed: bool, detail: str = ""):
        _ACCEPTANCE.setdefault(criterion, []).append((check, bool(passed), detail))
        return bool(passed)


@pytest.fixture
def acceptance():
    return Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for crit in sorted(_ACCEPTANCE):
        checks = _ACCEPTANCE[crit]
        ok = all(p for _, p, _ in checks)
        failed = [c for c, p, _ in checks if not p]
        tail = "" if ok else "  failing: " + ", ".join(failed)
        tr.write_line(f"criterion {crit}: {'PASS' if ok else 'FAIL'} ({len(checks)} checks){tail}")
        for check, passed, detail in checks:
            tr.write_line(f"    [{'pass' if passed else 'FAIL'}] {check} {detail}".rstrip())
