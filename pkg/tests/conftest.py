import numpy as np
import pytest

from angular_pool import HUB_LEVELS, PiecewiseLinearCdf
from angular_pool.verify import gaussian_cdf


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def uniform():
    return PiecewiseLinearCdf.uniform(0.0, 1.0)


@pytest.fixture
def gaussian_pair():
    """The running two-Gaussian example: means -0.15 and 0.15, sd 0.1."""
    return [gaussian_cdf(-0.15, 0.1, HUB_LEVELS), gaussian_cdf(0.15, 0.1, HUB_LEVELS)]


def assert_valid_cdf(F):
    x, p = F.x, F.p
    assert x.size >= 2
    assert p[0] == 0.0 and p[-1] == 1.0
    assert np.all(np.diff(x) >= 0)
    assert np.all(np.diff(p) >= 0)
    assert np.all(np.isfinite(x))
