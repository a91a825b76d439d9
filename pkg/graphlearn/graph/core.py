"""
Vectorized graph representation, the degree operator, Laplacians, total variation and the GFT.

Edge vectors use lexicographic upper-triangular pair order, so pair (i, j) with i < j sits at
index i*n - i*(i+1)/2 + (j - i - 1). Laplacians are dense.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import linalg, sparse
from scipy.spatial.distance import pdist

from graphlearn.models.graph import DistanceVector, EdgeVector, GftBasis, SignalMatrix, pair_count, pair_offset

SIGN_TOLERANCE = 1e-12
# Eigenvalues this far below zero, relative to the spectral radius, are round-off.
NEGATIVE_EIGENVALUE_RTOL = 1e-10


class GraphInputError(ValueError):
    pass


class InvalidPairError(GraphInputError):
    pass


def pair_index(i: int, j: int, n: int) -> int:
    if not 0 <= i < j < n:
        raise InvalidPairError(f"pair ({i}, {j}) is not a valid i < j < n={n} pair")
    return pair_offset(i, j, n)


@lru_cache(maxsize=64)
def pair_nodes(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Row and column node of every edge index, in vectorization order."""
    rows, cols = np.triu_indices(n, k=1)
    rows.setflags(write=False)
    cols.setflags(write=False)
    return rows, cols


@lru_cache(maxsize=64)
def degree_operator(n: int) -> sparse.csr_matrix:
    """The N x N(N-1)/2 binary operator S with S @ w = W @ 1."""
    rows, cols = pair_nodes(n)
    edge_ids = np.arange(pair_count(n))
    data = np.ones(2 * edge_ids.shape[0])
    return sparse.csr_matrix(
        (data, (np.concatenate([rows, cols]), np.concatenate([edge_ids, edge_ids]))),
        shape=(n, pair_count(n)),
    )


def _weights(w: EdgeVector | np.ndarray) -> tuple[np.ndarray, int]:
    if isinstance(w, EdgeVector):
        return np.asarray(w.w), w.n
    arr = np.asarray(w, dtype=float)
    n = int(round((1 + np.sqrt(1 + 8 * arr.shape[0])) / 2))
    if pair_count(n) != arr.shape[0]:
        raise GraphInputError(f"length {arr.shape[0]} is not N(N-1)/2 for any node count")
    return arr, n


def degrees(w: EdgeVector | np.ndarray) -> np.ndarray:
    weights, n = _weights(w)
    return degree_operator(n) @ weights


def degrees_adjoint(d: np.ndarray) -> np.ndarray:
    """S^T d: the sum of the two endpoint values for every pair."""
    d = np.asarray(d, dtype=float)
    rows, cols = pair_nodes(d.shape[0])
    return d[rows] + d[cols]


def distance_vector(x: SignalMatrix) -> DistanceVector:
    data = np.asarray(x.data)
    if data.shape[1] < 1:
        raise GraphInputError("at least one signal is required")
    if not np.all(np.isfinite(data)):
        raise GraphInputError("signal matrix contains non-finite values")
    return DistanceVector(n=x.n, z=pdist(data, metric="sqeuclidean"))


def signal_distances(x: np.ndarray) -> np.ndarray:
    """Per-sample distance vector (x_i - x_j)^2 for a single signal."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise GraphInputError("signal contains non-finite values")
    rows, cols = pair_nodes(x.shape[0])
    diff = x[rows] - x[cols]
    return diff * diff


def adjacency(w: EdgeVector | np.ndarray) -> np.ndarray:
    weights, n = _weights(w)
    rows, cols = pair_nodes(n)
    adj = np.zeros((n, n))
    adj[rows, cols] = weights
    adj[cols, rows] = weights
    return adj


def laplacian(w: EdgeVector | np.ndarray) -> np.ndarray:
    adj = adjacency(w)
    return np.diag(adj.sum(axis=1)) - adj


def total_variation(lap: np.ndarray, x: np.ndarray) -> float:
    lap = np.asarray(lap, dtype=float)
    x = np.asarray(x, dtype=float)
    if lap.shape != (x.shape[0], x.shape[0]):
        raise GraphInputError(f"Laplacian {lap.shape} does not match signal length {x.shape[0]}")
    return max(float(x @ lap @ x), 0.0)


def gft_decompose(lap: np.ndarray) -> GftBasis:
    lap = np.asarray(lap, dtype=float)
    if lap.ndim != 2 or lap.shape[0] != lap.shape[1]:
        raise GraphInputError(f"Laplacian must be square, got shape {lap.shape}")
    scale = max(float(np.max(np.abs(lap))), 1.0)
    if not np.allclose(lap, lap.T, rtol=0.0, atol=1e-10 * scale):
        raise GraphInputError("Laplacian must be symmetric")

    n = lap.shape[0]
    if not np.any(lap):
        return GftBasis(eigenvalues=np.zeros(n), eigenvectors=np.eye(n))

    eigenvalues, eigenvectors = linalg.eigh(lap)
    radius = float(np.max(np.abs(eigenvalues)))
    if eigenvalues[0] < -NEGATIVE_EIGENVALUE_RTOL * radius:
        raise GraphInputError(
            f"matrix is not positive semidefinite (smallest eigenvalue {eigenvalues[0]:.3g}); not a Laplacian"
        )
    eigenvalues = np.maximum(eigenvalues, 0.0)
    for k in range(n):
        column = eigenvectors[:, k]
        leading = np.flatnonzero(np.abs(column) > SIGN_TOLERANCE)
        if leading.size and column[leading[0]] < 0:
            eigenvectors[:, k] = -column
    return GftBasis(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def gft_project(basis: GftBasis, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[0] != basis.n:
        raise GraphInputError(f"signal length {x.shape[0]} does not match basis size {basis.n}")
    return basis.eigenvectors.T @ x


def gft_inverse(basis: GftBasis, coefficients: np.ndarray) -> np.ndarray:
    return basis.eigenvectors @ np.asarray(coefficients, dtype=float)
