import numpy as np
import pytest

from salmetrics.core import ViewingGeometry
from salmetrics.scoring import ground_truth
from salmetrics.synthetic import make_dataset


@pytest.fixture(scope="session")
def small_images():
    return make_dataset(12, seed=3, width=64, height=48, ppd=3.0, n_observers=8)


@pytest.fixture(scope="session")
def small_dataset(small_images):
    return [im.fixations for im in small_images]


@pytest.fixture(scope="session")
def geom():
    return ViewingGeometry(3.0)


@pytest.fixture(scope="session")
def small_truth(small_dataset, geom):
    return ground_truth(small_dataset[0], geom, small_dataset)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
