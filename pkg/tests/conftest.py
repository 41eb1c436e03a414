import numpy as np
import pytest

from mixsense import RngStream, SystemConfig, build_mixture_matrix, fixture_affinity_matrix


@pytest.fixture(scope="session")
def reference_affinity():
    return fixture_affinity_matrix()


@pytest.fixture(scope="session")
def default_config():
    return SystemConfig()


@pytest.fixture(scope="session")
def alphabet16():
    return build_mixture_matrix(20, 16, 3, RngStream(100, 0).generator())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
