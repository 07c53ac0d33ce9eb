import numpy as np
import pytest

from bayesbrittle.metric_space import build_grid_space


@pytest.fixture
def line3():
    return build_grid_space([0.0, 0.5, 1.0])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
