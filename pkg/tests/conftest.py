import numpy as np
import pytest

from telemap.diffeo import fit
from telemap.scenario import bundled_scenario


@pytest.fixture(scope="session")
def toy_corr():
    return bundled_scenario("toy2d")


@pytest.fixture(scope="session")
def valve_corr():
    return bundled_scenario("valves3d")


@pytest.fixture(scope="session")
def toy_diffeo(toy_corr):
    return fit(toy_corr, n_layers=100, mu=0.3, beta1=0.5, beta2=1.0)


@pytest.fixture(scope="session")
def valve_diffeo(valve_corr):
    return fit(valve_corr, n_layers=60)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
