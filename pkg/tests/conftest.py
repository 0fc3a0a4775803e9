import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or rep.when != "call":
        return
    number, title = marker.args
    _ACCEPTANCE.append((number, title, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    verdicts = {}
    for number, title, passed in _ACCEPTANCE:
        prev = verdicts.get(number, (title, True))
        verdicts[number] = (title, prev[1] and passed)  # parametrized cases must all pass
    terminalreporter.section("acceptance criteria")
    for number in sorted(verdicts):
        title, passed = verdicts[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {title}")
