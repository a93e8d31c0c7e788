import numpy as np
import pytest

from cpls.simulate import GridSpec, PathSample


@pytest.fixture
def toy_grid():
    return GridSpec(n_steps=4, dt=0.5, drop_first=0)


def make_sample(grid: GridSpec, x_rows, y_rows) -> PathSample:
    x = np.asarray(x_rows, dtype=float)
    y = np.asarray(y_rows, dtype=float)
    return PathSample(grid, x, y)


@pytest.fixture
def small_sample():
    """A tiny deterministic sample with values inside [0, 1] for trig bases."""
    grid = GridSpec(n_steps=4, dt=0.5, drop_first=0)
    rng = np.random.default_rng(7)
    x = 0.1 + 0.8 * rng.random((3, 5))
    y = 0.1 + 0.8 * rng.random((3, 5))
    return make_sample(grid, x, y)
