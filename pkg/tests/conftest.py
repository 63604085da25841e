"""Shared fixtures and the acceptance summary hook.

The acceptance tests (tests/test_acceptance.py, named test_NN_*) each
cover one criterion.  This hook collects their outcomes plus any measured
values they record and prints one PASS/FAIL line per criterion at the end
of the run, also written to acceptance_report.txt at the repo root.
"""

import re

import pytest

from carnot_heat import build_structure, default_evaluator

# criterion number -> (short name, passed)
_results = {}
# criterion number -> measured-value detail string
_notes = {}


def _record_note(num, detail):
    _notes[int(num)] = str(detail)


@pytest.fixture
def acceptance_note():
    """Recorder for measured values shown in the acceptance summary."""
    return _record_note


@pytest.fixture(scope="session")
def structure11():
    return build_structure(1, 1)


@pytest.fixture(scope="session")
def evaluator11(structure11):
    # shared so the radial-profile cache carries across tests
    return default_evaluator(structure11)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.fspath.basename != "test_acceptance.py":
        return
    match = re.match(r"test_(\d+)_(\w+)", item.name)
    if not match:
        return
    num = int(match.group(1))
    if rep.when == "call":
        _results[num] = (match.group(2), rep.passed)
    elif rep.when == "setup" and not rep.passed:
        _results[num] = (match.group(2), False)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    lines = []
    for num in sorted(_results):
        name, passed = _results[num]
        line = "criterion %02d %s: %s" % (num, name,
                                          "PASS" if passed else "FAIL")
        detail = _notes.get(num)
        if detail:
            line += "  " + detail
        lines.append(line)
        terminalreporter.write_line(line)
    try:
        path = config.rootpath / "acceptance_report.txt"
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError:
        pass
