import numpy as np
import pytest

from morreylab.homspace import build_from_table, build_uniform_grid, space_from_points


@pytest.fixture(scope="session")
def two_atom():
    return build_from_table([[0.0, 1.0], [1.0, 0.0]], [0.5, 0.5])


@pytest.fixture(scope="session")
def grid3():
    return build_uniform_grid(3, 1, "interval")


@pytest.fixture(scope="session")
def grid16():
    return build_uniform_grid(16, 1, "interval")


@pytest.fixture(scope="session")
def circle32():
    return build_uniform_grid(32, 1, "circle")


@pytest.fixture(scope="session")
def cloud20():
    rng = np.random.default_rng(11)
    return space_from_points(rng.random((20, 2)), rng.uniform(0.5, 1.5, 20) / 20)


def random_cloud(n, seed, dim=2):
    rng = np.random.default_rng(seed)
    return space_from_points(rng.random((n, dim)), rng.uniform(0.5, 1.5, n) / n)
