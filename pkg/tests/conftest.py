import numpy as np
import pytest

from laddertwin.ladder import build_ladder
from laddertwin.model import CausalFactors

BEARINGS = ("B1", "B2", "B3", "B4")

# Feb-18 factor tables (rows = effect, columns = cause)
FEB18_STRUCTURAL = [
    [0, 0.1408, 0, 0.2626],
    [0, 0, -0.1251, -0.23],
    [0, -0.1855, 0, 0.226],
    [0, 0, 0, 0],
]
FEB18_LAGGED = [
    [0.3926, 0, 0.1719, -0.5922],
    [0.1274, 0.5031, -0.1042, 0],
    [0, 0, 0.5469, 0],
    [0, 0, 0, 0.6423],
]

# A quiet start-of-test day: SNLs plus two thin cross links, no loops through
# more than one channel.
FEB12_STRUCTURAL = [
    [0, 0, 0, 0],
    [0, 0, 0, 0],
    [0, 0, 0, 0.11],
    [0, 0, 0, 0],
]
FEB12_LAGGED = [
    [0.35, 0, 0, 0],
    [0.12, 0.4, 0, 0],
    [0, 0, 0.45, 0],
    [0, 0, 0, 0.5],
]


def feb18() -> CausalFactors:
    return CausalFactors(np.array(FEB18_STRUCTURAL), (np.array(FEB18_LAGGED),), BEARINGS)


def feb12() -> CausalFactors:
    return CausalFactors(np.array(FEB12_STRUCTURAL), (np.array(FEB12_LAGGED),), BEARINGS)


@pytest.fixture
def feb18_factors():
    return feb18()


@pytest.fixture
def feb18_graph():
    return build_ladder(feb18())


@pytest.fixture
def feb12_factors():
    return feb12()


def pytest_terminal_summary(terminalreporter):
    import sys

    acceptance = sys.modules.get("tests.test_acceptance")
    if acceptance is not None and acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acceptance.RESULTS:
            terminalreporter.write_line(line)
