import numpy as np
import pytest

from rase_lab.core import PhysicsParams, ProtocolTiming
from rase_lab.dsp import DspConfig
from rase_lab.layout import get_layout
from rase_lab.pipeline import calibrate_vacuum


@pytest.fixture(scope="session")
def params():
    return PhysicsParams()


@pytest.fixture(scope="session")
def timing():
    return ProtocolTiming()


@pytest.fixture(scope="session")
def layout(params, timing):
    return get_layout(params, timing, DspConfig())


@pytest.fixture(scope="session")
def calibration(layout):
    return calibrate_vacuum(layout, 8000, 11)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
