import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose, assert_array_equal
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from conftest import chain_model
from spectral_gng import diagnostics
from spectral_gng.eigen_select import refine_variance
from spectral_gng.errors import InputError
from spectral_gng.spectral_graph import (
    SIGMA_FLOOR, AffinityMatrix, LocalScales, affinity, component_labels, dump_matrix_csv, local_scales,
    normalized_laplacian, null_space_basis, spectrum,
)


# ---- local_scales ----

def test_single_neighbor_sets_scale():
    model = chain_model([[0.0, 0.0], [2.0, 0.0]], [(0, 1)])
    assert_allclose(local_scales(model).sigma, [2.0, 2.0])


def test_scale_is_nearest_graph_neighbor():
    model = chain_model([[0.0, 0.0], [3.0, 0.0], [0.0, 1.0], [-2.0, 0.0]], [(0, 1), (0, 2), (0, 3)])
    assert local_scales(model, K=1).sigma[0] == pytest.approx(1.0)


def test_second_neighbor_with_K_2():
    model = chain_model([[0.0, 0.0], [3.0, 0.0], [0.0, 1.0], [-2.0, 0.0]], [(0, 1), (0, 2), (0, 3)])
    assert local_scales(model, K=2).sigma[0] == pytest.approx(2.0)


def test_isolated_neuron_falls_back_to_global_nearest():
    model = chain_model([[0.0, 0.0], [1.0, 0.0], [5.0, 0.0]], [(0, 1)])
    with diagnostics.collect() as found:
        scales = local_scales(model)
    assert scales.sigma[2] == pytest.approx(4.0)
    assert [d.code for d in found] == ["scale_fallback"]


def test_coincident_neurons_are_floored():
    model = chain_model([[1.0, 1.0], [1.0, 1.0]], [(0, 1)])
    with diagnostics.collect() as found:
        scales = local_scales(model)
    assert_allclose(scales.sigma, [SIGMA_FLOOR, SIGMA_FLOOR])
    assert "scale_floor" in [d.code for d in found]


def test_local_scales_rejects_bad_K():
    with pytest.raises(InputError):
        local_scales(chain_model([[0.0], [1.0]], [(0, 1)]), K=0)


# ---- affinity ----

def test_coincident_endpoints_have_unit_affinity():
    model = chain_model([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]], [(0, 1), (1, 2)])
    A = affinity(model, LocalScales(sigma=np.ones(3)))
    assert A.values[0, 1] == 1.0


def test_unit_exponent_gives_inverse_e():
    model = chain_model([[0.0, 0.0], [1.0, 0.0]], [(0, 1)])
    A = affinity(model, local_scales(model))
    assert A.values[0, 1] == pytest.approx(np.exp(-1.0))
    assert A.values[1, 0] == A.values[0, 1]


def test_non_edges_have_zero_affinity():
    model = chain_model([[0.0], [1.0], [1.5]], [(0, 1), (1, 2)])
    A = affinity(model, LocalScales(sigma=np.ones(3)))
    assert A.values[0, 2] == 0.0
    assert np.all(np.diag(A.values) == 0.0)
    assert A.nonzeros == 4


def test_affinity_rejects_non_positive_scales():
    model = chain_model([[0.0], [1.0]], [(0, 1)])
    with pytest.raises(InputError):
        affinity(model, LocalScales(sigma=np.array([1.0, 0.0])))


# ---- normalized_laplacian / spectrum ----

def test_two_node_laplacian():
    L = normalized_laplacian(AffinityMatrix(np.array([[0.0, 1.0], [1.0, 0.0]])))
    assert_allclose(L.values, [[1.0, -1.0], [-1.0, 1.0]])
    assert_allclose(spectrum(L).eigenvalues, [0.0, 2.0], atol=1e-10)


def test_two_components_give_double_zero():
    pair = np.array([[0.0, 1.0], [1.0, 0.0]])
    A = np.block([[pair, np.zeros((2, 2))], [np.zeros((2, 2)), pair]])
    eigenvalues = spectrum(normalized_laplacian(A)).eigenvalues
    assert np.sum(eigenvalues < 1e-8) == 2


def test_three_node_path():
    A = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    assert_allclose(spectrum(normalized_laplacian(A)).eigenvalues, [0.0, 1.0, 2.0], atol=1e-10)


def test_complete_graph_on_three_nodes():
    A = np.ones((3, 3)) - np.eye(3)
    assert_allclose(spectrum(normalized_laplacian(A)).eigenvalues, [0.0, 1.5, 1.5], atol=1e-10)


def test_connected_graph_has_zero_first_eigenvalue():
    rng = np.random.default_rng(5)
    A = np.zeros((8, 8))
    for i in range(7):
        A[i, i + 1] = A[i + 1, i] = rng.uniform(0.2, 1.0)
    assert spectrum(normalized_laplacian(A)).eigenvalues[0] < 1e-8


def test_isolated_node_gets_identity_row():
    A = np.zeros((3, 3))
    A[0, 1] = A[1, 0] = 1.0
    with diagnostics.collect() as found:
        L = normalized_laplacian(A)
    assert_allclose(L.values[2], [0.0, 0.0, 1.0])
    assert_allclose(L.values[:, 2], [0.0, 0.0, 1.0])
    assert L.isolated.tolist() == [2]
    assert [d.code for d in found] == ["isolated_node"]


def _random_components(rng, c):
    sizes = rng.integers(2, 6, size=c)
    n = int(sizes.sum())
    A = np.zeros((n, n))
    start = 0
    for size in sizes:
        nodes = np.arange(start, start + size)
        for a, b in zip(nodes[:-1], nodes[1:]):
            A[a, b] = A[b, a] = rng.uniform(0.5, 1.5)
        for _ in range(int(size)):
            a, b = rng.choice(nodes, size=2, replace=False)
            A[a, b] = A[b, a] = rng.uniform(0.5, 1.5)
        start += size
    order = rng.permutation(n)
    return A[np.ix_(order, order)]


def test_zero_multiplicity_matches_component_count():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        c = int(rng.integers(1, 7))
        A = _random_components(rng, c)
        expected, _ = connected_components(csr_matrix(A > 0), directed=False)
        eigenvalues = spectrum(normalized_laplacian(A)).eigenvalues
        assert expected == c
        assert int(np.sum(eigenvalues < 1e-8)) == c


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (6, 6), elements=st.floats(0.0, 1.0, allow_nan=False)))
def test_laplacian_is_symmetric_with_spectrum_in_0_2(B):
    A = np.triu(B, k=1)
    A = A + A.T
    L = normalized_laplacian(A)
    assert_allclose(L.values, L.values.T)
    eigenvalues = spectrum(L).eigenvalues
    assert np.all(eigenvalues >= 0.0) and np.all(eigenvalues <= 2.0)


def test_component_labels():
    model = chain_model([[0.0], [1.0], [5.0], [6.0], [9.0], [10.0]], [(0, 1), (2, 3), (4, 5)])
    count, labels = component_labels(model)
    assert count == 3
    assert labels[0] == labels[1] != labels[2]


def test_dump_matrix_csv(tmp_path):
    path = tmp_path / "A.csv"
    dump_matrix_csv(AffinityMatrix(np.eye(2)), path)
    assert path.read_text().splitlines() == ["1.0,0.0", "0.0,1.0"]


# ---- null space ----

def test_zero_eigenspace_is_the_component_basis():
    rng = np.random.default_rng(9)
    A = _random_components(rng, 3)
    L = normalized_laplacian(A)
    decomposition = spectrum(L)
    _, labels = connected_components(csr_matrix(A > 0), directed=False)
    sizes = np.bincount(labels)

    assert_array_equal(decomposition.eigenvalues[:3], [0.0, 0.0, 0.0])
    supports = [np.flatnonzero(decomposition.eigenvectors[:, i]) for i in range(3)]
    assert [s.size for s in supports] == sorted(sizes, reverse=True)
    for i, support in enumerate(supports):
        expected = np.sqrt(L.degrees[support])
        assert_allclose(decomposition.eigenvectors[support, i], expected / np.linalg.norm(expected))
    assert_allclose(L.values @ decomposition.eigenvectors[:, :3], 0.0, atol=1e-12)


def test_null_space_basis_skips_isolated_nodes():
    A = np.zeros((5, 5))
    A[0, 1] = A[1, 0] = 1.0
    A[3, 4] = A[4, 3] = 1.0
    basis = null_space_basis(normalized_laplacian(A))
    assert basis.shape == (5, 2)
    assert_allclose(basis[:, 0], [1 / np.sqrt(2), 1 / np.sqrt(2), 0.0, 0.0, 0.0])
    assert_allclose(basis[:, 1], [0.0, 0.0, 0.0, 1 / np.sqrt(2), 1 / np.sqrt(2)])


def test_equal_components_are_ordered_by_lowest_member():
    pair = np.array([[0.0, 1.0], [1.0, 0.0]])
    A = np.zeros((4, 4))
    A[np.ix_([1, 3], [1, 3])] = pair
    A[np.ix_([0, 2], [0, 2])] = pair
    basis = null_space_basis(normalized_laplacian(A))
    assert np.flatnonzero(basis[:, 0]).tolist() == [0, 2]
    assert np.flatnonzero(basis[:, 1]).tolist() == [1, 3]


def test_two_indicator_eigenvectors_keep_both_columns():
    rng = np.random.default_rng(31)
    for _ in range(20):
        decomposition = spectrum(normalized_laplacian(_random_components(rng, 3)))
        assert refine_variance(decomposition.eigenvectors[:, 1:3]).p == 2
