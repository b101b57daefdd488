import numpy as np
import pytest

from gazedp import GazeCollection, GazeMap, GridSpec


def random_collection(rng, n, width, height, max_count=5):
    """Random integer-count collection for oracle-style tests."""
    grid = GridSpec(width, height)
    maps = tuple(
        GazeMap(grid, rng.integers(0, max_count + 1, size=grid.shape))
        for _ in range(n))
    return GazeCollection(grid, maps)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def small_collection(rng):
    return random_collection(rng, n=6, width=5, height=4, max_count=5)
