import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when != "call":
        return
    number, title = marker.args
    entry = CRITERIA.setdefault(number, {"title": title, "ok": True, "detail": ""})
    if call.excinfo is not None:
        entry["ok"] = False
        msg = str(call.excinfo.value).strip().splitlines()
        entry["detail"] = msg[0][:200] if msg else call.excinfo.typename
    detail = getattr(item, "criterion_detail", None)
    if detail and entry["ok"]:
        entry["detail"] = detail


@pytest.fixture
def record(request):
    """Attach a one-line measurement to the criterion summary."""

    def _record(text):
        request.node.criterion_detail = text

    return _record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        e = CRITERIA[number]
        status = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {number:2d} [{status}] {e['title']}: {e['detail']}")
