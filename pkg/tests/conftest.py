from pathlib import Path

import pytest

from finmcp.clock import LogicalClock
from finmcp.provider import FixtureProvider
from finmcp.tools import RunLog, ToolSuite

DATA = Path(__file__).parent / "data"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def provider():
    return FixtureProvider()


@pytest.fixture
def suite(provider):
    return ToolSuite(provider, RunLog(), LogicalClock())


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def golden_dir():
    return GOLDEN


# acceptance criteria: one PASS/FAIL line each at the end of the run

_VERDICTS: dict[str, bool] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or (report.when != "call" and report.passed):
        return
    name = marker.args[0]
    _VERDICTS[name] = _VERDICTS.get(name, True) and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok in _VERDICTS.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")
