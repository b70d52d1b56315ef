"""Shared pytest wiring.

Acceptance-gate tests (tests/test_acceptance.py, functions named
test_criterion_NN_*) get one PASS/FAIL line each in the terminal summary
so the gate's outcome is readable at a glance even under captured output.
"""
import re
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

_CRITERION = re.compile(r"test_acceptance\.py::test_(criterion_\d+_\w+)")
_results: dict = {}


def pytest_runtest_logreport(report):
    match = _CRITERION.search(report.nodeid)
    if not match:
        return
    name = match.group(1)
    if report.when == "call":
        _results[name] = "PASS" if report.passed else "FAIL"
    elif report.when == "setup" and report.failed:
        _results[name] = "FAIL"
    elif report.when == "setup" and report.skipped:
        _results[name] = "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(_results):
        terminalreporter.write_line(f"{name}: {_results[name]}")
