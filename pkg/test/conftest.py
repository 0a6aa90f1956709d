import numpy as np
import pytest

from models import Graph
from services.graph.fixtures import path, planted_partition, triangle
from services.graph.splits import split_all, training_graph


@pytest.fixture
def tri():
    return triangle()


@pytest.fixture
def path4():
    return path(4)


@pytest.fixture
def square():
    return Graph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)], name="square")


@pytest.fixture(scope="session")
def planted():
    return planted_partition(n=40, p_in=0.5, p_out=0.05, seed=1)


@pytest.fixture(scope="session")
def planted_splits(planted):
    splits = split_all(planted, seed=0)
    return splits, training_graph(planted, splits)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

