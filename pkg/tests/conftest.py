import pytest

# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE = {}
CRITERIA = range(1, 11)
_selected = []


def pytest_collection_modifyitems(items):
    _selected.extend(i for i in items if i.module.__name__.endswith("test_acceptance"))


def pytest_terminal_summary(terminalreporter):
    if not _selected:
        return
    terminalreporter.section("acceptance criteria")
    for c in CRITERIA:
        ok, detail = ACCEPTANCE.get(c, (False, "no verdict (not run or errored early)"))
        terminalreporter.write_line(f"criterion {c:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def record():
    def _record(criterion, ok, detail):
        ACCEPTANCE[criterion] = (bool(ok), detail)
        print(f"criterion {criterion:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return _record
