import numpy as np
import pytest

from stirap5.model import PulseSet, SimConfig


@pytest.fixture(scope="session")
def fig2a():
    return PulseSet.from_peaks(10, 30, 70, 30, 50)


@pytest.fixture(scope="session")
def fig2b():
    return PulseSet.from_peaks(10, 60, 40, 30, 50)


@pytest.fixture(scope="session")
def fig3():
    return PulseSet.from_peaks(20, 50, 40, 15, 75)


@pytest.fixture
def base_config():
    return SimConfig()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)


def random_pulses(rng, lo=0.5, hi=100.0) -> PulseSet:
    """A generic pulse set with the default envelope shapes."""
    return PulseSet.from_peaks(*rng.uniform(lo, hi, size=5))
