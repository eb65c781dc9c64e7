import numpy as np
import pytest

from microtrap.species import RB85, detuning_from_wavelength_offset
from microtrap.trapfield import characterize_site


@pytest.fixture
def species():
    return RB85


@pytest.fixture
def red_2nm():
    return detuning_from_wavelength_offset(RB85, 2e-9)


@pytest.fixture
def macro_site(red_2nm):
    """The 50 mW, 15 um single-beam trap."""
    return characterize_site(RB85, 50e-3, 15e-6, red_2nm)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
