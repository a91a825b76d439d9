from __future__ import annotations

import numpy as np
import pandas as pd
import pytest

from graphlearn.evaluation.metrics import (
    MetricError,
    ZeroReferenceError,
    accuracy,
    algebraic_connectivity,
    edge_set,
    f_measure,
    precision_recall,
    relative_temporal_deviation,
    series_transform,
)
from graphlearn.models.graph import EdgeVector


def _graph(n: int, edges: list[tuple[int, int]], weight: float = 1.0) -> EdgeVector:
    return EdgeVector.from_edges(n, [(i, j, weight) for i, j in edges])


TRUTH = _graph(5, [(0, 1), (1, 2), (2, 3), (3, 4)])


def test_f_measure_examples() -> None:
    assert f_measure(TRUTH, TRUTH) == pytest.approx(1.0)
    assert f_measure(_graph(5, [(0, 2), (1, 3)]), TRUTH) == pytest.approx(0.0)
    assert f_measure(_graph(5, [(0, 1), (1, 2)]), TRUTH) == pytest.approx(2.0 / 3.0)
    assert f_measure(EdgeVector.zeros(5), TRUTH) == 0.0


def test_f_measure_applies_the_threshold() -> None:
    weak = EdgeVector.from_edges(5, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (0, 4, 1e-4)])
    assert f_measure(weak, TRUTH) == pytest.approx(1.0)
    assert f_measure(weak, TRUTH, threshold=0.0) < 1.0


def test_precision_recall() -> None:
    estimate = _graph(5, [(0, 1), (1, 2), (0, 4)])
    precision, recall = precision_recall(estimate, TRUTH)
    assert precision == pytest.approx(2.0 / 3.0)
    assert recall == pytest.approx(0.5)
    assert precision_recall(EdgeVector.zeros(5), TRUTH) == (0.0, 0.0)


def test_metric_input_errors() -> None:
    with pytest.raises(MetricError):
        f_measure(TRUTH, EdgeVector.zeros(5))
    with pytest.raises(MetricError):
        f_measure(TRUTH, _graph(4, [(0, 1)]))
    with pytest.raises(MetricError):
        accuracy([0, 1], [0])


def test_edge_set() -> None:
    edges = edge_set(EdgeVector.from_edges(4, [(0, 1, 0.5), (2, 3, 1e-5)]))
    assert edges.pairs == frozenset({(0, 1)})
    assert len(edges) == 1


def test_accuracy() -> None:
    assert accuracy(["a", "b", "a", "a"], ["a", "b", "b", "a"]) == pytest.approx(0.75)


def test_relative_temporal_deviation_examples() -> None:
    w = _graph(5, [(0, 1), (2, 4)], weight=0.7)
    assert relative_temporal_deviation(w, w) == 0.0
    assert relative_temporal_deviation(w.scaled(2.0), w) == pytest.approx(1.0)
    with pytest.raises(ZeroReferenceError):
        relative_temporal_deviation(w, EdgeVector.zeros(5))
    with pytest.raises(ZeroDivisionError):
        relative_temporal_deviation(w, EdgeVector.zeros(5))


def test_algebraic_connectivity_examples() -> None:
    assert algebraic_connectivity(_graph(4, [(0, 1), (2, 3)])) == 0.0
    assert algebraic_connectivity(EdgeVector(n=3, w=[1.0, 1.0, 1.0])) == pytest.approx(3.0)
    assert algebraic_connectivity(EdgeVector(n=2, w=[1.0])) == pytest.approx(2.0)
    assert algebraic_connectivity(EdgeVector.from_edges(3, [(0, 1, 1.0), (1, 2, 1e-5)]), threshold=1e-3) == 0.0


def test_series_transform_examples() -> None:
    flat = series_transform(np.full((4, 3), 50.0), "rdtv")
    np.testing.assert_array_equal(flat.data, np.zeros((3, 3)))

    step = series_transform(np.array([[100.0], [110.0]]), "rdtv")
    np.testing.assert_allclose(step.data, [[0.1]])

    prices = pd.DataFrame({"node_0": [1.0, np.e], "node_1": [np.e**2, 1.0]}, index=["d1", "d2"])
    logs = series_transform(prices, "log")
    np.testing.assert_allclose(logs.data, [[0.0, 1.0], [2.0, 0.0]])


def test_series_transform_rejects_bad_prices() -> None:
    with pytest.raises(MetricError):
        series_transform(np.array([[1.0, 0.0], [2.0, 3.0]]), "log")
    with pytest.raises(MetricError):
        series_transform(np.array([[1.0, 2.0]]), "rdtv")
    with pytest.raises(MetricError):
        series_transform(np.ones((2, 2)), "returns")  # type: ignore[arg-type]


def _random_edges(rng: np.random.Generator, n: int, density: float) -> EdgeVector:
    w = (rng.random(n * (n - 1) // 2) < density) * rng.uniform(0.5, 2.0, size=n * (n - 1) // 2)
    w[rng.integers(w.size)] = 1.0
    return EdgeVector(n=n, w=w)


def test_f_measure_is_symmetric() -> None:
    rng = np.random.default_rng(11)
    for _ in range(50):
        first, second = _random_edges(rng, 8, 0.3), _random_edges(rng, 8, 0.3)
        assert f_measure(first, second) == pytest.approx(f_measure(second, first))
        precision, recall = precision_recall(first, second)
        assert precision_recall(second, first) == pytest.approx((recall, precision))


def test_adding_an_edge_never_lowers_the_connectivity() -> None:
    rng = np.random.default_rng(12)
    for _ in range(50):
        graph = _random_edges(rng, 7, 0.25)
        missing = np.flatnonzero(graph.w == 0)
        if not missing.size:
            continue
        w = np.array(graph.w)
        w[rng.choice(missing)] = rng.uniform(0.1, 2.0)
        assert algebraic_connectivity(EdgeVector(n=7, w=w)) >= algebraic_connectivity(graph) - 1e-9
