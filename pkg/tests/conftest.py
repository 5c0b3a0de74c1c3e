import numpy as np
import pytest
from hypothesis import settings

from verhulstpc.scenario import loads_scenario

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def two_user():
    """Symmetric K=2 system: g = [[1, .1], [.1, 1]], noise .01 W, targets .5."""
    g = np.array([[1.0, 0.1], [0.1, 1.0]])
    return g, np.array([0.5, 0.5]), 0.01


@pytest.fixture
def two_user_scenario():
    # noise 10 dBm = 0.01 W; target SNR 0 dB with R = Rc/2 gives Gamma_min = 0.5, F = 2
    return loads_scenario(
        "rates_bps = [1.92e6]\n"
        "class_of_user = [1, 1]\n"
        "target_snr_db = 0\n"
        "noise_dbm = 10\n"
        "pmin_dbm = -30\n"
        "seed = 3\n"
    )


@pytest.fixture
def default_scenario():
    return loads_scenario("K = 7\nseed = 1\n")
