import numpy as np
import pytest

from simulation.functions import f1
from solver.angular import Mod1Samples
from solver.grid_graph import GridSpec, build_graph, build_laplacian


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def chain_spec():
    return GridSpec.chain(500, 2)


@pytest.fixture
def f1_clean(chain_spec):
    return f1(chain_spec.coordinates()[:, 0])


@pytest.fixture
def f1_residues(f1_clean):
    return Mod1Samples.wrap(f1_clean)


def chain_laplacian(n, k):
    return build_laplacian(build_graph(GridSpec.chain(n, k)))
