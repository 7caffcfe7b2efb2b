from __future__ import annotations

from pathlib import Path

import pytest

DATA = Path(__file__).resolve().parents[1] / "src" / "ntnsplit" / "data"

_CRITERIA: dict[int, dict] = {}


@pytest.fixture
def data_dir() -> Path:
    return DATA


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    num, title = marker
    entry = _CRITERIA.setdefault(num, {"title": title, "ok": True})
    entry["ok"] = entry["ok"] and report.outcome == "passed"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        report.criterion = tuple(mark.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        entry = _CRITERIA[num]
        status = "PASS" if entry["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {num} ({entry['title']}): {status}")
