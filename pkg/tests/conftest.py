import sys

import numpy as np
import pytest

from scenver.cases.example import example_box, example_chain
from scenver.summary import summarize


@pytest.fixture
def rng():
    return np.random.default_rng(20240521)


@pytest.fixture
def chain():
    return example_chain()


@pytest.fixture
def c(chain):
    return summarize(chain, 1)


@pytest.fixture
def box():
    return example_box()


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    RESULTS = mod.RESULTS
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[k])
