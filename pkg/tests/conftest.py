import numpy as np
import pytest

from helpers import hand_instance, small_mnl_instance, two_resource_instance


@pytest.fixture
def hand():
    return hand_instance()


@pytest.fixture
def two_res():
    return two_resource_instance()


@pytest.fixture
def mnl_inst():
    return small_mnl_instance()


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)
