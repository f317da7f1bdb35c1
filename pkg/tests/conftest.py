import numpy as np
import pytest

from swirllab.grid import get_grid
from swirllab.spectral import DyadicPartition


@pytest.fixture(scope="session")
def grid_small():
    return get_grid(96, 128, 3.0, 3.0)


@pytest.fixture(scope="session")
def grid_base():
    return get_grid(128, 256, 4.0, 4.0)


@pytest.fixture(scope="session")
def grid_wide():
    # decay room for Gaussian closed-form checks
    return get_grid(160, 256, 6.0, 6.0)


@pytest.fixture(scope="session")
def partition():
    return DyadicPartition(0, 5)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260809)


def mesh(grid):
    return np.meshgrid(grid.radial_nodes, grid.z_nodes, indexing="ij")
