import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from multisoliton.grid import make_grid

settings.register_profile(
    "ci",
    deadline=None,
    max_examples=25,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def g64():
    return make_grid(64, 3.0)


@pytest.fixture(scope="session")
def g32():
    return make_grid(32, 3.0)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
