from __future__ import annotations

import numpy as np
import pytest

from graphlearn.graph.core import (
    GraphInputError,
    InvalidPairError,
    adjacency,
    degree_operator,
    degrees,
    degrees_adjoint,
    distance_vector,
    gft_decompose,
    gft_inverse,
    gft_project,
    laplacian,
    pair_index,
    signal_distances,
    total_variation,
)
from graphlearn.models.graph import EdgeVector, SignalMatrix, pair_count


def _random_graph(n: int, seed: int) -> EdgeVector:
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.0, 1.0, pair_count(n))
    w[rng.uniform(size=w.shape) < 0.4] = 0.0
    return EdgeVector(n=n, w=w)


def test_pair_index_follows_lexicographic_order() -> None:
    assert pair_index(0, 1, 4) == 0
    assert pair_index(0, 3, 4) == 2
    assert pair_index(2, 3, 4) == 5
    rows, cols = np.triu_indices(6, k=1)
    assert [pair_index(int(i), int(j), 6) for i, j in zip(rows, cols, strict=True)] == list(range(15))


@pytest.mark.parametrize(("i", "j", "n"), [(1, 1, 4), (2, 1, 4), (0, 4, 4), (-1, 2, 4)])
def test_pair_index_rejects_invalid_pairs(i: int, j: int, n: int) -> None:
    with pytest.raises(InvalidPairError):
        pair_index(i, j, n)


def test_degrees_examples() -> None:
    np.testing.assert_allclose(degrees(EdgeVector(n=3, w=[1.0, 1.0, 1.0])), [2.0, 2.0, 2.0])
    np.testing.assert_allclose(degrees(EdgeVector(n=3, w=[1.0, 0.0, 0.0])), [1.0, 1.0, 0.0])
    np.testing.assert_allclose(degrees(EdgeVector.zeros(5)), np.zeros(5))


def test_degrees_match_adjacency_row_sums() -> None:
    graph = _random_graph(8, seed=3)
    np.testing.assert_allclose(degrees(graph), adjacency(graph).sum(axis=1))


def test_degree_operator_adjoint() -> None:
    rng = np.random.default_rng(0)
    n = 7
    d = rng.normal(size=n)
    w = rng.normal(size=pair_count(n))
    np.testing.assert_allclose(degree_operator(n).T @ d, degrees_adjoint(d))
    assert d @ (degree_operator(n) @ w) == pytest.approx(degrees_adjoint(d) @ w)


@pytest.mark.parametrize("n", [3, 5, 10])
def test_degree_operator_spectral_norm(n: int) -> None:
    s = degree_operator(n).toarray()
    eigenvalues = np.linalg.eigvalsh(s @ s.T)
    assert eigenvalues[-1] == pytest.approx(2 * (n - 1), abs=1e-8)
    np.testing.assert_allclose(eigenvalues[:-1], np.full(n - 1, n - 2.0), atol=1e-8)


def test_distance_vector_examples() -> None:
    identical = SignalMatrix(data=np.ones((4, 3)))
    np.testing.assert_allclose(distance_vector(identical).z, np.zeros(6))

    two_nodes = SignalMatrix(data=[[0.0, 0.0], [1.0, 1.0]])
    np.testing.assert_allclose(distance_vector(two_nodes).z, [2.0])


def test_distance_vector_rejects_non_finite_data() -> None:
    with pytest.raises(GraphInputError):
        distance_vector(SignalMatrix(data=[[0.0, np.nan], [1.0, 1.0]]))


def test_distance_vector_sums_per_signal_distances() -> None:
    rng = np.random.default_rng(5)
    x = SignalMatrix(data=rng.normal(size=(6, 4)))
    total = sum(signal_distances(x.signal(k)) for k in range(x.p))
    np.testing.assert_allclose(distance_vector(x).z, total)


def test_laplacian_examples() -> None:
    np.testing.assert_allclose(
        laplacian(EdgeVector(n=3, w=[1.0, 1.0, 1.0])),
        [[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]],
    )
    np.testing.assert_allclose(laplacian(EdgeVector.zeros(4)), np.zeros((4, 4)))
    np.testing.assert_allclose(laplacian(EdgeVector(n=2, w=[1.0])), [[1.0, -1.0], [-1.0, 1.0]])


def test_laplacian_is_symmetric_psd_with_zero_row_sums() -> None:
    lap = laplacian(_random_graph(9, seed=11))
    np.testing.assert_allclose(lap, lap.T)
    np.testing.assert_allclose(lap.sum(axis=1), np.zeros(9), atol=1e-12)
    assert np.linalg.eigvalsh(lap).min() >= -1e-10


def test_total_variation_examples() -> None:
    k3 = laplacian(EdgeVector(n=3, w=[1.0, 1.0, 1.0]))
    assert total_variation(k3, np.array([1.0, 0.0, 0.0])) == pytest.approx(2.0)
    assert total_variation(laplacian(_random_graph(6, seed=2)), np.full(6, 3.5)) == pytest.approx(0.0, abs=1e-12)


def test_total_variation_of_eigenvector_is_its_eigenvalue() -> None:
    lap = laplacian(_random_graph(7, seed=8))
    basis = gft_decompose(lap)
    for k in range(7):
        assert total_variation(lap, basis.eigenvectors[:, k]) == pytest.approx(basis.eigenvalues[k], abs=1e-9)


def test_smoothness_equals_weighted_distances() -> None:
    rng = np.random.default_rng(21)
    graph = _random_graph(10, seed=4)
    signals = SignalMatrix(data=rng.normal(size=(10, 25)))
    lap = laplacian(graph)
    smoothness = sum(total_variation(lap, signals.signal(k)) for k in range(signals.p))
    assert smoothness == pytest.approx(float(graph.w @ distance_vector(signals).z), rel=1e-9)


def test_gft_examples() -> None:
    two = gft_decompose(laplacian(EdgeVector(n=2, w=[1.0])))
    np.testing.assert_allclose(two.eigenvalues, [0.0, 2.0], atol=1e-12)
    np.testing.assert_allclose(two.eigenvectors[:, 0], [1 / np.sqrt(2), 1 / np.sqrt(2)])

    k3 = gft_decompose(laplacian(EdgeVector(n=3, w=[1.0, 1.0, 1.0])))
    np.testing.assert_allclose(k3.eigenvalues, [0.0, 3.0, 3.0], atol=1e-10)

    empty = gft_decompose(np.zeros((4, 4)))
    np.testing.assert_allclose(empty.eigenvalues, np.zeros(4))
    np.testing.assert_allclose(empty.eigenvectors, np.eye(4))


def test_gft_basis_is_orthonormal_and_sign_fixed() -> None:
    basis = gft_decompose(laplacian(_random_graph(12, seed=6)))
    assert np.all(np.diff(basis.eigenvalues) >= -1e-12)
    np.testing.assert_allclose(basis.eigenvectors.T @ basis.eigenvectors, np.eye(12), atol=1e-10)
    for k in range(12):
        column = basis.eigenvectors[:, k]
        leading = column[np.flatnonzero(np.abs(column) > 1e-12)[0]]
        assert leading > 0


def test_gft_rejects_asymmetric_input() -> None:
    with pytest.raises(GraphInputError):
        gft_decompose(np.array([[1.0, -1.0], [0.0, 0.0]]))


def test_gft_rejects_indefinite_input() -> None:
    with pytest.raises(GraphInputError):
        gft_decompose(np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_gft_reconstructs_the_laplacian() -> None:
    lap = laplacian(_random_graph(9, seed=12))
    basis = gft_decompose(lap)
    rebuilt = basis.eigenvectors @ np.diag(basis.eigenvalues) @ basis.eigenvectors.T
    assert np.linalg.norm(rebuilt - lap) <= 1e-8 * np.linalg.norm(lap)
    assert abs(basis.eigenvalues[0]) <= 1e-9


def test_gft_projection_examples() -> None:
    basis = gft_decompose(laplacian(_random_graph(6, seed=9)))
    np.testing.assert_allclose(gft_project(basis, basis.eigenvectors[:, 2]), np.eye(6)[2], atol=1e-10)
    np.testing.assert_allclose(gft_project(basis, np.zeros(6)), np.zeros(6))

    x = np.random.default_rng(1).normal(size=6)
    np.testing.assert_allclose(gft_inverse(basis, gft_project(basis, x)), x, atol=1e-10)
    with pytest.raises(GraphInputError):
        gft_project(basis, np.zeros(5))
