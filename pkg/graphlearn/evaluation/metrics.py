"""
Evaluation metrics: edge recovery (precision, recall, F-measure), classification accuracy,
relative temporal deviation, algebraic connectivity and the price-series transforms.
"""

from __future__ import annotations

from collections.abc import Hashable, Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
import pandas as pd
from scipy import linalg
from sklearn.metrics import accuracy_score, f1_score, precision_score, recall_score

from graphlearn.graph.core import laplacian
from graphlearn.models.graph import EdgeVector, SignalMatrix

DEFAULT_EDGE_THRESHOLD = 1e-3
CONNECTIVITY_TOLERANCE = 1e-9


class MetricError(ValueError):
    pass


class ZeroReferenceError(MetricError, ZeroDivisionError):
    pass


@dataclass(frozen=True)
class EdgeSet:
    n: int
    pairs: frozenset[tuple[int, int]]
    threshold: float

    def __len__(self) -> int:
        return len(self.pairs)


def edge_set(w: EdgeVector, threshold: float = DEFAULT_EDGE_THRESHOLD) -> EdgeSet:
    return EdgeSet(n=w.n, pairs=frozenset((i, j) for i, j, _ in w.edges(threshold)), threshold=threshold)


def _masks(estimate: EdgeVector, truth: EdgeVector, threshold: float) -> tuple[np.ndarray, np.ndarray]:
    if estimate.n != truth.n:
        raise MetricError(f"estimate has n={estimate.n}, truth has n={truth.n}")
    truth_mask = truth.edge_mask(threshold)
    if not truth_mask.any():
        raise MetricError("recall is undefined: the ground-truth graph has no edges after pruning")
    return estimate.edge_mask(threshold).astype(int), truth_mask.astype(int)


def precision_recall(
    estimate: EdgeVector, truth: EdgeVector, threshold: float = DEFAULT_EDGE_THRESHOLD
) -> tuple[float, float]:
    """Edge precision and recall; an empty estimate has precision 0."""
    predicted, actual = _masks(estimate, truth, threshold)
    precision = precision_score(actual, predicted, zero_division=0)
    recall = recall_score(actual, predicted, zero_division=0)
    return float(precision), float(recall)


def f_measure(estimate: EdgeVector, truth: EdgeVector, threshold: float = DEFAULT_EDGE_THRESHOLD) -> float:
    predicted, actual = _masks(estimate, truth, threshold)
    return float(f1_score(actual, predicted, zero_division=0))


def accuracy(predicted: Sequence[Hashable], actual: Sequence[Hashable]) -> float:
    if len(predicted) != len(actual):
        raise MetricError(f"{len(predicted)} predictions for {len(actual)} labels")
    if not actual:
        raise MetricError("accuracy of an empty test set is undefined")
    return float(accuracy_score(list(actual), list(predicted)))


def relative_temporal_deviation(w_t: EdgeVector, w_prev: EdgeVector) -> float:
    """||W_t - W_prev||_F / ||W_prev||_F; the sqrt(2) of the symmetric form cancels on vectors."""
    if w_t.n != w_prev.n:
        raise MetricError(f"graphs have n={w_t.n} and n={w_prev.n}")
    reference = float(np.linalg.norm(w_prev.w))
    if reference == 0.0:
        raise ZeroReferenceError("relative temporal deviation against an empty previous graph")
    return float(np.linalg.norm(np.asarray(w_t.w) - np.asarray(w_prev.w))) / reference


def algebraic_connectivity(w: EdgeVector, threshold: float = 0.0) -> float:
    """Second smallest Laplacian eigenvalue of the graph pruned at `threshold`."""
    graph = w.pruned(threshold) if threshold > 0 else w
    lam2 = float(linalg.eigvalsh(laplacian(graph), subset_by_index=[1, 1])[0])
    return 0.0 if lam2 < CONNECTIVITY_TOLERANCE else lam2


def series_transform(prices: pd.DataFrame | np.ndarray, mode: Literal["log", "rdtv"]) -> SignalMatrix:
    """
    Turn a T x N price table (rows are dates) into graph signals, one column per time point.

    `log` keeps every date; `rdtv` yields |p(t) - p(t-1)| / |p(t-1)| from the second date on.
    """
    values = prices.to_numpy(dtype=float) if isinstance(prices, pd.DataFrame) else np.asarray(prices, dtype=float)
    if values.ndim != 2 or values.shape[0] == 0 or values.shape[1] == 0:
        raise MetricError(f"prices must be a non-empty T x N table, got shape {values.shape}")
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise MetricError("prices must be finite and strictly positive")
    if mode == "log":
        return SignalMatrix(data=np.log(values).T)
    if mode == "rdtv":
        if values.shape[0] < 2:
            raise MetricError("rdtv needs at least 2 time points")
        change = np.abs(np.diff(values, axis=0)) / np.abs(values[:-1])
        return SignalMatrix(data=change.T)
    raise MetricError(f"unknown series transform {mode!r}; expected log or rdtv")
