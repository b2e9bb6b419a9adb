import re

import pytest

_NOTES = {}
_OUTCOMES = {}


@pytest.fixture
def note(request):
    """Attach a line of detail to the acceptance summary for this test."""
    def add(text):
        _NOTES.setdefault(request.node.name, []).append(str(text))
    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    match = re.fullmatch(r"test_criterion_(\d+)", item.name)
    if match and (rep.when == "call" or (rep.when == "setup" and rep.failed)):
        _OUTCOMES[int(match.group(1))] = (rep.passed, item.name)


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_OUTCOMES):
        passed, name = _OUTCOMES[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}")
        for line in _NOTES.get(name, []):
            terminalreporter.write_line(f"    {line}")
