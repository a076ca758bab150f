from pathlib import Path

import pytest

from ductsim.vehicle import default_params

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "src" / "ductsim" / "scenarios"


@pytest.fixture
def params():
    return default_params()


@pytest.fixture
def scenario_dir():
    return SCENARIO_DIR


# one verdict line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
