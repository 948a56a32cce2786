import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy.linalg import eigh

from solver.errors import DisconnectedGraphError, InvalidSpecError
from solver.grid_graph import (
    GridSpec,
    NeighborGraph,
    build_graph,
    build_laplacian,
    laplacian_quadform,
    spectral_bounds,
)


def test_chain_edges_and_degrees():
    g = build_graph(GridSpec.chain(5, 2))
    assert g.edges.tolist() == [[0, 1], [0, 2], [1, 2], [1, 3], [2, 3], [2, 4], [3, 4]]
    assert_array_equal(g.degrees, [2, 3, 4, 3, 2])


def test_king_graph_3x3():
    g = build_graph(GridSpec(d=2, m=3, k=1))
    assert g.num_edges == 20
    assert g.degrees[4] == 8
    assert g.degrees[0] == 3
    assert np.all(g.edges[:, 0] < g.edges[:, 1])


def test_edge_count_formula_chain():
    n, k = 40, 3
    g = build_graph(GridSpec.chain(n, k))
    assert g.num_edges == sum(n - s for s in range(1, k + 1))
    assert g.degrees.max() == 2 * k


def test_laplacian_structure():
    spec = GridSpec(d=2, m=5, k=2)
    graph = build_graph(spec)
    lap = build_laplacian(graph)
    dense = lap.dense()
    assert_allclose(dense, dense.T)
    assert_allclose(dense.sum(axis=1), 0.0, atol=1e-12)
    assert_array_equal(lap.diagonal, graph.degrees)
    assert lap.gershgorin_bound() == 2 * graph.degrees.max()


def test_quadform_matches_edge_sum(rng):
    graph = build_graph(GridSpec.chain(30, 2))
    lap = build_laplacian(graph)
    x = rng.standard_normal(30)
    i, j = graph.edges.T
    assert_allclose(laplacian_quadform(lap, x), np.sum((x[i] - x[j]) ** 2))
    z = x + 1j * rng.standard_normal(30)
    assert_allclose(laplacian_quadform(lap, z), np.sum(np.abs(z[i] - z[j]) ** 2))
    assert laplacian_quadform(lap, np.ones(30)) == 0.0


@pytest.mark.parametrize("d, m, k", [(2, 7, 1), (2, 9, 2), (3, 5, 1), (3, 6, 2)])
def test_degree_bounds_in_higher_dimensions(d, m, k):
    graph = build_graph(GridSpec(d=d, m=m, k=k))
    assert graph.degrees.min() == (k + 1) ** d - 1
    assert graph.degrees.max() == (2 * k + 1) ** d - 1
    assert graph.num_edges == graph.degrees.sum() // 2


def test_disconnected_graph_rejected():
    graph = NeighborGraph(n=3, edges=np.array([[0, 1]]), degrees=np.array([1, 1, 0]))
    with pytest.raises(DisconnectedGraphError) as e:
        build_laplacian(graph)
    assert e.value.components == 2


@pytest.mark.parametrize("spec", [GridSpec.chain(30, 2), GridSpec.chain(25, 4), GridSpec(d=2, m=6, k=1)])
def test_spectral_bounds_bracket_eigenvalues(spec):
    beta = eigh(build_laplacian(build_graph(spec)).dense(), eigvals_only=True)
    bounds = spectral_bounds(spec)
    assert beta[-1] <= bounds.lambda_max_upper + 1e-9
    assert beta[1] >= bounds.fiedler_lower - 1e-12


def test_coordinates_lexicographic():
    coords = GridSpec(d=2, m=3, k=1).coordinates()
    assert coords.shape == (9, 2)
    assert_allclose(coords[1], [0.0, 0.5])
    assert_allclose(coords[3], [0.5, 0.0])
    assert_allclose(GridSpec.chain(5, 1).coordinates()[:, 0], [0, 0.25, 0.5, 0.75, 1.0])


def test_from_count():
    assert GridSpec.from_count(16, 2, 1).m == 4
    assert GridSpec.from_count(14884, 2, 1).m == 122
    with pytest.raises(InvalidSpecError):
        GridSpec.from_count(15, 2, 1)


@pytest.mark.parametrize("d, m, k", [(0, 5, 1), (1, 1, 1), (1, 5, 0), (1, 5, 5)])
def test_invalid_spec(d, m, k):
    with pytest.raises(InvalidSpecError):
        GridSpec(d=d, m=m, k=k)
