import numpy as np
import pytest

from shearband import default_params
from shearband.grid import Grid1D


@pytest.fixture
def params():
    return default_params()


@pytest.fixture
def grid():
    return Grid1D(H=1.0, N=401)


@pytest.fixture
def small_grid():
    return Grid1D(H=1.0, N=101)


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)
