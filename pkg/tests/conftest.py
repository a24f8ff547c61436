import pytest

from optochaos import pipeline
from optochaos.dynamics import FIG4_NO_FEEDBACK, FIG4_PARAMS

ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def fig4_runs():
    """Both chaotic-feedback spectra cases, computed once per session."""
    return {tag: pipeline.run_fig4_case(params)
            for tag, params in (("fig4a", FIG4_NO_FEEDBACK), ("fig4b", FIG4_PARAMS))}


@pytest.fixture
def report():
    """Record one acceptance line: ``report(number, ok, detail)``."""
    def record(number, ok, detail):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[number])
