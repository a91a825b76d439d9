from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import squareform


def pair_count(n: int) -> int:
    return n * (n - 1) // 2


def pair_offset(i: int, j: int, n: int) -> int:
    """Position of pair (i, j), i < j, in lexicographic pair order; callers validate the pair."""
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def _frozen_array(values: object, *, ndim: int, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def _nodes_for_length(length: int) -> int:
    n = int(round((1 + np.sqrt(1 + 8 * length)) / 2))
    if pair_count(n) != length:
        raise ValueError(f"length {length} is not N(N-1)/2 for any node count N")
    return n


@dataclass(frozen=True)
class EdgeVector:
    """
    Upper-triangular edge weights of an undirected graph without self-loops.

    Entries follow lexicographic pair order (0,1), (0,2), ..., (N-2,N-1).
    """

    n: int
    w: np.ndarray

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"EdgeVector needs at least 2 nodes, got n={self.n}")
        w = _frozen_array(self.w, ndim=1, name="w")
        if w.shape[0] != pair_count(self.n):
            raise ValueError(f"w has length {w.shape[0]}, expected {pair_count(self.n)} for n={self.n}")
        if not np.all(np.isfinite(w)):
            raise ValueError("edge weights must be finite")
        if np.any(w < 0):
            raise ValueError("edge weights must be nonnegative")
        object.__setattr__(self, "w", w)

    @classmethod
    def from_array(cls, w: object) -> EdgeVector:
        arr = np.asarray(w, dtype=float)
        return cls(n=_nodes_for_length(arr.shape[0]), w=arr)

    @classmethod
    def zeros(cls, n: int) -> EdgeVector:
        return cls(n=n, w=np.zeros(pair_count(n)))

    @classmethod
    def from_adjacency(cls, adjacency: np.ndarray) -> EdgeVector:
        adj = np.asarray(adjacency, dtype=float)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {adj.shape}")
        n = adj.shape[0]
        rows, cols = np.triu_indices(n, k=1)
        return cls(n=n, w=adj[rows, cols])

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int, float]]) -> EdgeVector:
        """Build from (i, j, weight) triples with i < j; pairs not listed are zero."""
        w = np.zeros(pair_count(n))
        for i, j, weight in edges:
            if not 0 <= i < j < n:
                raise ValueError(f"invalid pair ({i}, {j}) for n={n}")
            w[pair_offset(i, j, n)] = weight
        return cls(n=n, w=w)

    def adjacency(self) -> np.ndarray:
        return squareform(np.asarray(self.w), checks=False)

    def edges(self, threshold: float = 0.0) -> list[tuple[int, int, float]]:
        rows, cols = np.triu_indices(self.n, k=1)
        keep = self.edge_mask(threshold)
        return [(int(i), int(j), float(v)) for i, j, v in zip(rows[keep], cols[keep], self.w[keep], strict=True)]

    def edge_count(self, threshold: float = 0.0) -> int:
        return int(np.count_nonzero(self.edge_mask(threshold)))

    def pruned(self, threshold: float) -> EdgeVector:
        """Drop weights below `threshold`."""
        return EdgeVector(n=self.n, w=np.where(self.edge_mask(threshold), self.w, 0.0))

    def edge_mask(self, threshold: float) -> np.ndarray:
        return (self.w > 0) & (self.w >= threshold)

    def scaled(self, factor: float) -> EdgeVector:
        return EdgeVector(n=self.n, w=np.asarray(self.w) * float(factor))


@dataclass(frozen=True)
class DistanceVector:
    """Pairwise squared Euclidean distances between node measurement rows, in EdgeVector order."""

    n: int
    z: np.ndarray

    def __post_init__(self) -> None:
        z = _frozen_array(self.z, ndim=1, name="z")
        if z.shape[0] != pair_count(self.n):
            raise ValueError(f"z has length {z.shape[0]}, expected {pair_count(self.n)} for n={self.n}")
        if not np.all(np.isfinite(z)):
            raise ValueError("distances must be finite")
        if np.any(z < 0):
            raise ValueError("distances must be nonnegative")
        object.__setattr__(self, "z", z)

    @classmethod
    def from_array(cls, z: object) -> DistanceVector:
        arr = np.asarray(z, dtype=float)
        return cls(n=_nodes_for_length(arr.shape[0]), z=arr)

    def scaled(self, factor: float) -> DistanceVector:
        return DistanceVector(n=self.n, z=np.asarray(self.z) * float(factor))


@dataclass(frozen=True)
class SignalMatrix:
    """N x P data matrix; column p is one graph signal, row i the measurements at node i."""

    data: np.ndarray

    def __post_init__(self) -> None:
        data = _frozen_array(self.data, ndim=2, name="data")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return int(self.data.shape[0])

    @property
    def p(self) -> int:
        return int(self.data.shape[1])

    @classmethod
    def from_signals(cls, signals: Iterable[np.ndarray]) -> SignalMatrix:
        columns = [np.asarray(x, dtype=float) for x in signals]
        if not columns:
            raise ValueError("at least one signal is required")
        return cls(data=np.column_stack(columns))

    def signal(self, index: int) -> np.ndarray:
        return self.data[:, index]

    def columns(self, indices: Iterable[int]) -> SignalMatrix:
        return SignalMatrix(data=self.data[:, list(indices)])


@dataclass(frozen=True)
class GftBasis:
    """Ascending Laplacian eigenvalues and the matching orthonormal eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self) -> None:
        eigenvalues = _frozen_array(self.eigenvalues, ndim=1, name="eigenvalues")
        eigenvectors = _frozen_array(self.eigenvectors, ndim=2, name="eigenvectors")
        n = eigenvalues.shape[0]
        if eigenvectors.shape != (n, n):
            raise ValueError(f"eigenvectors must be {n}x{n}, got {eigenvectors.shape}")
        object.__setattr__(self, "eigenvalues", eigenvalues)
        object.__setattr__(self, "eigenvectors", eigenvectors)

    @property
    def n(self) -> int:
        return int(self.eigenvalues.shape[0])
