import numpy as np
import pytest

from ofdmpilots.grid import GridConfig


@pytest.fixture
def cfg():
    return GridConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)
