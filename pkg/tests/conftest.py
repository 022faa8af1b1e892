import os

import pytest

LONG = os.environ.get("IDPRANK_LONG") == "1"

_criteria = {}  # number -> title
_owner = {}  # nodeid -> number
_status = {}  # number -> "PASS" | "FAIL" | "SKIP"
_notes = {}  # number -> measured values


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            number, title = mark.args
            _criteria[number] = title
            _owner[item.nodeid] = number


def pytest_deselected(items):
    for item in items:
        _owner.pop(item.nodeid, None)
    active = set(_owner.values())
    for number in list(_criteria):
        if number not in active:
            del _criteria[number]


def pytest_runtest_logreport(report):
    number = _owner.get(report.nodeid)
    if number is None:
        return
    for key, value in report.user_properties:
        if key == "measured":
            _notes.setdefault(number, []).append(value)
    if report.failed:
        _status[number] = "FAIL"
    elif report.skipped:
        _status.setdefault(number, "SKIP")
    elif report.when == "call" and _status.get(number) != "FAIL":
        _status[number] = "PASS"


@pytest.fixture
def measured(request):
    """Attach a measured value to the acceptance summary line."""
    return lambda text: request.node.user_properties.append(("measured", text))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section(f"acceptance criteria ({'long' if LONG else 'desk'} mode)")
    for number in sorted(_criteria):
        status = _status.get(number, "NOT RUN")
        tr.write_line(f"[{status}] {number}. {_criteria[number]}")
        seen = []
        for note in _notes.get(number, []):
            if note not in seen:
                seen.append(note)
                tr.write_line(f"         {note}")
