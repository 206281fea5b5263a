import numpy as np
import pytest

from mgprecoding.config import ExperimentConfig
from mgprecoding.harness import drop_channel


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def desk_config():
    return ExperimentConfig(drops=10, seed=3)


@pytest.fixture(scope="session")
def desk_channel(desk_config):
    return drop_channel(desk_config, 0)


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
