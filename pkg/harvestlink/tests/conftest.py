import numpy as np
import pytest

from harvestlink.Helpers.HelperFunctions import build_sim_config, build_system_params, db_to_linear


@pytest.fixture
def params():
    return build_system_params()


@pytest.fixture
def relay_params():
    """Symmetric relay placement at -18 dB"""
    return build_system_params(gamma_o=db_to_linear(-18.0), theta=0.05, d=0.5, mu=2.0)


@pytest.fixture
def sim_config():
    return build_sim_config(slots=1_000_000, seed=20240601)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_relay_params(count: int, seed: int = 8):
    """Parameter sets drawn from gamma_o in [-20, -5] dB, theta in {0.02, 0.05}, d in [0.2, 0.8], mu in {2, 3}"""
    rng = np.random.default_rng(seed)
    return [
        build_system_params(
            gamma_o=db_to_linear(float(rng.uniform(-20.0, -5.0))),
            theta=float(rng.choice([0.02, 0.05])),
            d=float(rng.uniform(0.2, 0.8)),
            mu=float(rng.choice([2.0, 3.0])),
        )
        for _ in range(count)
    ]
