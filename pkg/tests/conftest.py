import os

import pytest

import acceptance_log


def pytest_collection_modifyitems(config, items):
    if os.environ.get("QCVSTABLE_FULL_SCALE") == "1":
        return
    skip = pytest.mark.skip(reason="set QCVSTABLE_FULL_SCALE=1 to run (hours of CPU)")
    for item in items:
        if "full_scale" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if acceptance_log.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(acceptance_log.LINES):
            terminalreporter.write_line(line)
