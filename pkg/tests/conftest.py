import sys
from pathlib import Path

import pytest

from bbgky.dsl import parse_spec

DATA = Path(__file__).parent / "data"


def load(name):
    return parse_spec((DATA / f"{name}.bbgky").read_text())[0]


@pytest.fixture(scope="session")
def system1():
    return load("system1")


@pytest.fixture(scope="session")
def system2():
    return load("system2")


@pytest.fixture(scope="session")
def three_families():
    return load("three_families")


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
