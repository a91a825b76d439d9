"""
Seeded generators for synthetic experiments: ER/BA graphs, edge rewiring, Gaussian smooth
signals x ~ N(0, L^+ + sigma_e^2 I) and piecewise-constant streams.

Every generator is a pure function of its arguments and seed.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Iterator
from dataclasses import dataclass

import networkx as nx
import numpy as np
from scipy import linalg

from graphlearn.graph.core import laplacian
from graphlearn.models.config import GraphSpec, StreamSpec
from graphlearn.models.graph import EdgeVector, SignalMatrix

logger = logging.getLogger(__name__)

MAX_CONNECTIVITY_RETRIES = 100
PSEUDOINVERSE_TOLERANCE = 1e-9


class GeneratorError(RuntimeError):
    pass


def parse_graph_spec(text: str, n: int, *, seed: int = 0) -> GraphSpec:
    """Parse `er:p=0.1`, `er:0.1`, `ba:m=3` or `ba:3`."""
    kind, _, rest = text.strip().partition(":")
    kind = kind.strip().lower()
    key, _, value = rest.partition("=")
    if not value:
        key, value = ("p" if kind == "er" else "m"), key
    key = key.strip().lower()
    try:
        if kind == "er" and key == "p":
            return GraphSpec(kind="er", n=n, p=float(value), seed=seed)
        if kind == "ba" and key == "m":
            return GraphSpec(kind="ba", n=n, m=int(value), seed=seed)
    except ValueError as exc:
        raise GeneratorError(f"invalid graph spec {text!r}: {exc}") from exc
    raise GeneratorError(f"unknown graph spec {text!r}; expected er:p=<prob> or ba:m=<edges>")


def _attempt_seed(seed: int, attempt: int) -> int:
    if attempt == 0:
        return seed
    return int(np.random.SeedSequence([seed, attempt]).generate_state(1)[0])


def _draw(spec: GraphSpec, seed: int) -> nx.Graph:
    if spec.kind == "er":
        assert spec.p is not None
        return nx.gnp_random_graph(spec.n, spec.p, seed=seed)
    assert spec.m is not None
    # A single-node seed has no edges for preferential attachment to sample from.
    seed_graph = nx.complete_graph(max(spec.m, 2))
    return nx.barabasi_albert_graph(spec.n, spec.m, seed=seed, initial_graph=seed_graph)


def gen_graph_with_retries(spec: GraphSpec) -> tuple[EdgeVector, int]:
    """
    Draw a connected unit-weight graph, redrawing with a salted seed until connected.

    Returns the graph and the number of draws it took.
    """
    for attempt in range(MAX_CONNECTIVITY_RETRIES):
        graph = _draw(spec, _attempt_seed(spec.seed, attempt))
        if nx.is_connected(graph):
            if attempt:
                logger.info(
                    "%s graph (n=%s, seed=%s) connected after %s draws", spec.label(), spec.n, spec.seed, attempt + 1
                )
            adj = nx.to_numpy_array(graph, nodelist=range(spec.n), weight=None)
            return EdgeVector.from_adjacency(adj), attempt + 1
    raise GeneratorError(
        f"no connected {spec.label()} graph with n={spec.n} after {MAX_CONNECTIVITY_RETRIES} draws (seed={spec.seed})"
    )


def gen_graph(spec: GraphSpec) -> EdgeVector:
    graph, _ = gen_graph_with_retries(spec)
    return graph


def rewire(w: EdgeVector, fraction: float, seed: int) -> EdgeVector:
    """
    Move floor(fraction * |E|) uniformly chosen edges onto uniformly chosen absent pairs.

    Inserted edges take over the removed weights, so the edge count and weight multiset are kept.
    """
    if not 0.0 <= fraction <= 1.0:
        raise GeneratorError(f"rewire fraction must lie in [0, 1], got {fraction}")
    present = np.flatnonzero(w.w > 0)
    absent = np.flatnonzero(w.w == 0)
    count = math.floor(fraction * present.size)
    if count == 0:
        return w
    if absent.size == 0:
        logger.warning("rewire on a complete graph (n=%s): no absent pairs, returning the input", w.n)
        return w
    if absent.size < count:
        raise GeneratorError(f"cannot rewire {count} edges: only {absent.size} absent pairs (graph too dense)")

    rng = np.random.default_rng(seed)
    removed = rng.choice(present, size=count, replace=False)
    inserted = rng.choice(absent, size=count, replace=False)
    weights = np.array(w.w)
    moved = weights[removed]
    weights[removed] = 0.0
    weights[inserted] = moved
    return EdgeVector(n=w.n, w=weights)


def _child_seeds(seed: int, count: int) -> list[int]:
    return [int(child.generate_state(1)[0]) for child in np.random.SeedSequence(seed).spawn(count)]


def gen_perturbed_graphs(base: EdgeVector, count: int, fraction: float, seed: int) -> list[EdgeVector]:
    """`count` independent rewirings of `base`, each moving the same proportion of edges."""
    if count < 0:
        raise GeneratorError(f"count must be >= 0, got {count}")
    return [rewire(base, fraction, child) for child in _child_seeds(seed, count)]


def gen_smooth_signals(w: EdgeVector, p: int, sigma_e: float, seed: int) -> SignalMatrix:
    """
    Draw p signals x = V+ diag(lambda+^(-1/2)) u + sigma_e v with u, v standard normal.

    V+/lambda+ are the Laplacian eigenpairs with eigenvalue above 1e-9, so the noiseless part
    has covariance L^+ and lies orthogonal to each connected component's constant vector.
    """
    if p < 1:
        raise GeneratorError(f"p must be >= 1, got {p}")
    if sigma_e < 0:
        raise GeneratorError(f"sigma_e must be >= 0, got {sigma_e}")
    eigenvalues, eigenvectors = linalg.eigh(laplacian(w))
    positive = eigenvalues > PSEUDOINVERSE_TOLERANCE
    null_dim = int(w.n - np.count_nonzero(positive))
    if null_dim > 1 and sigma_e == 0:
        logger.warning("graph has %s components and sigma_e=0: the signal covariance is rank-deficient", null_dim)

    rng = np.random.default_rng(seed)
    u = rng.standard_normal((int(np.count_nonzero(positive)), p))
    v = rng.standard_normal((w.n, p))
    scaled = u / np.sqrt(eigenvalues[positive])[:, None]
    return SignalMatrix(data=eigenvectors[:, positive] @ scaled + sigma_e * v)


def gen_perturbed_signals(base: EdgeVector, p: int, fraction: float, sigma_e: float, seed: int) -> SignalMatrix:
    """One smooth signal per independently rewired copy of `base`."""
    columns = []
    for child in _child_seeds(seed, p):
        graph_seed, signal_seed = _child_seeds(child, 2)
        graph = rewire(base, fraction, graph_seed)
        columns.append(gen_smooth_signals(graph, 1, sigma_e, signal_seed).signal(0))
    return SignalMatrix.from_signals(columns)


@dataclass(frozen=True)
class StreamSample:
    t: int
    x: np.ndarray
    segment: int
    label: int = 0


@dataclass(frozen=True)
class SegmentTruth:
    index: int
    start: int
    stop: int
    graph: EdgeVector
    draws: int = 0

    @property
    def duration(self) -> int:
        return self.stop - self.start


def realize_segments(spec: StreamSpec) -> list[SegmentTruth]:
    """Ground-truth graph per segment; rewire segments start from the previous segment's graph."""
    truths: list[SegmentTruth] = []
    start = 0
    previous: EdgeVector | None = None
    for index, segment in enumerate(spec.segments):
        if segment.graph is not None:
            graph, draws = gen_graph_with_retries(segment.graph)
        else:
            assert previous is not None and segment.rewire is not None
            graph, draws = rewire(previous, segment.rewire, segment.rewire_seed), 0
        truths.append(SegmentTruth(index=index, start=start, stop=start + segment.duration, graph=graph, draws=draws))
        start += segment.duration
        previous = graph
    return truths


@dataclass(frozen=True)
class SyntheticStream:
    spec: StreamSpec
    segments: tuple[SegmentTruth, ...]

    @property
    def horizon(self) -> int:
        return self.spec.horizon

    def truth_at(self, t: int) -> SegmentTruth:
        for segment in self.segments:
            if segment.start <= t < segment.stop:
                return segment
        raise GeneratorError(f"time {t} is outside the stream horizon {self.horizon}")

    def samples(self) -> Iterator[StreamSample]:
        for segment in self.segments:
            seed = self.spec.seed + segment.index
            signals = gen_smooth_signals(segment.graph, segment.duration, self.spec.sigma_e, seed)
            for offset in range(segment.duration):
                yield StreamSample(t=segment.start + offset, x=signals.data[:, offset].copy(), segment=segment.index)

    def __iter__(self) -> Iterator[StreamSample]:
        return self.samples()


def gen_stream(spec: StreamSpec) -> SyntheticStream:
    """Segment k draws its signals with seed spec.seed + k; iterate the result for the samples."""
    return SyntheticStream(spec=spec, segments=tuple(realize_segments(spec)))
