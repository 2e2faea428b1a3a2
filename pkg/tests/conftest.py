import numpy as np
import pytest

from propsvm.data import BagPartition, Dataset


@pytest.fixture
def rng():
    return np.random.default_rng(42)


def random_bagged_problem(rng, n=24, bag_size=6, dim=3, sep=0.0):
    """A labeled dataset with contiguous bags and true proportions.

    ``sep`` shifts the two classes apart along a fixed direction so tests
    can dial in how learnable the labels are.
    """
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    x = rng.normal(size=(n, dim))
    if sep:
        x += sep * y[:, None] * (np.arange(dim) == 0)
    bags = tuple(
        tuple(range(i, min(i + bag_size, n))) for i in range(0, n, bag_size)
    )
    props = tuple(float(np.mean(y[list(b)] == 1)) for b in bags)
    return Dataset(x, y), BagPartition(bags, props, n)


@pytest.fixture
def bagged_problem(rng):
    return random_bagged_problem(rng, sep=1.5)
