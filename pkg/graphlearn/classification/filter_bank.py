"""
Filter-bank classification on learned class graphs.

Each class c gets a graph learned discriminatively against the other classes, and the GFT basis
of its Laplacian. A signal is scored per class by the energy its ideal low-pass filtered GFT
keeps (the first `bandwidth` coefficients), and assigned to the class with the largest energy.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Hashable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from graphlearn.graph.core import distance_vector, gft_decompose, gft_project, laplacian
from graphlearn.learning.batch import BatchDiagnostics, build_problem, learn_batch
from graphlearn.learning.online import StreamState
from graphlearn.models.config import LearnConfig
from graphlearn.models.graph import EdgeVector, GftBasis, SignalMatrix

logger = logging.getLogger(__name__)

TIE_RTOL = 1e-12


class ClassifierError(ValueError):
    pass


def default_bandwidth(n: int, fraction: float = 1.0 / 3.0) -> int:
    """floor(fraction * n), at least 1."""
    return max(1, int(math.floor(fraction * n)))


@dataclass(frozen=True)
class ClassifierModel:
    classes: tuple[Hashable, ...]
    bases: tuple[GftBasis, ...]
    graphs: tuple[EdgeVector, ...]
    bandwidth: int
    normalized: bool = False
    diagnostics: tuple[BatchDiagnostics, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "bases", tuple(self.bases))
        object.__setattr__(self, "graphs", tuple(self.graphs))
        if len(self.classes) < 2:
            raise ClassifierError(f"a classifier needs at least 2 classes, got {len(self.classes)}")
        if len(set(self.classes)) != len(self.classes):
            raise ClassifierError(f"class labels must be unique: {list(self.classes)}")
        if not len(self.bases) == len(self.graphs) == len(self.classes):
            raise ClassifierError("classes, bases and graphs must align")
        sizes = {basis.n for basis in self.bases} | {graph.n for graph in self.graphs}
        if len(sizes) != 1:
            raise ClassifierError(f"all class graphs must share n, got {sorted(sizes)}")
        if not 1 <= self.bandwidth <= self.n:
            raise ClassifierError(f"bandwidth must lie in [1, {self.n}], got {self.bandwidth}")

    @property
    def n(self) -> int:
        return self.bases[0].n

    def index(self, label: Hashable) -> int:
        try:
            return self.classes.index(label)
        except ValueError:
            raise ClassifierError(f"unknown class label {label!r}") from None

    def basis(self, label: Hashable) -> GftBasis:
        return self.bases[self.index(label)]

    def graph(self, label: Hashable) -> EdgeVector:
        return self.graphs[self.index(label)]


@dataclass(frozen=True)
class Classification:
    label: Hashable
    energies: dict[Hashable, float]
    tied: bool = False


def _unit_frobenius(graph: EdgeVector) -> EdgeVector:
    # ||W||_F = sqrt(2) ||w|| for the symmetric adjacency.
    norm = math.sqrt(2.0) * float(np.linalg.norm(graph.w))
    return graph if norm == 0.0 else graph.scaled(1.0 / norm)


def basis_for_graph(graph: EdgeVector, *, normalize: bool = False) -> GftBasis:
    if normalize:
        graph = _unit_frobenius(graph)
    return gft_decompose(laplacian(graph))


def model_from_graphs(
    graphs: Mapping[Hashable, EdgeVector],
    bandwidth: int | None = None,
    *,
    normalize: bool = False,
    diagnostics: Sequence[BatchDiagnostics] = (),
) -> ClassifierModel:
    """Build the filter bank from already learned (and pruned) class graphs."""
    classes = tuple(graphs)
    if not classes:
        raise ClassifierError("no class graphs given")
    kept = tuple(graphs[label] for label in classes)
    for label, graph in zip(classes, kept, strict=True):
        if graph.edge_count() == 0:
            logger.warning("class %s has an empty graph; its basis is the identity", label)
    n = kept[0].n
    return ClassifierModel(
        classes=classes,
        bases=tuple(basis_for_graph(graph, normalize=normalize) for graph in kept),
        graphs=kept,
        bandwidth=default_bandwidth(n) if bandwidth is None else bandwidth,
        normalized=normalize,
        diagnostics=tuple(diagnostics),
    )


def fit(
    datasets: Mapping[Hashable, SignalMatrix],
    config: LearnConfig,
    bandwidth: int | None = None,
    *,
    normalize: bool = False,
    workers: int = 1,
) -> ClassifierModel:
    """
    Learn one discriminative graph per class and the matching filter bank.

    Class problems share only immutable distance vectors, so they are solved on a thread pool
    with `workers` threads; results keep the order of `datasets`.
    """
    if len(datasets) < 2:
        raise ClassifierError(f"fit needs at least 2 classes, got {len(datasets)}")
    sizes = {data.n for data in datasets.values()}
    if len(sizes) != 1:
        raise ClassifierError(f"all classes must share n, got {sorted(sizes)}")
    for label, data in datasets.items():
        if data.p == 0:
            raise ClassifierError(f"class {label!r} has no training signals")

    distances = {label: distance_vector(data) for label, data in datasets.items()}
    counts = {label: data.p for label, data in datasets.items()}
    problems = {label: build_problem(distances, label, config, counts=counts) for label in datasets}
    labels = list(datasets)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        results = list(executor.map(lambda label: learn_batch(problems[label]), labels))

    graphs: dict[Hashable, EdgeVector] = {}
    for label, (weights, diag) in zip(labels, results, strict=True):
        graphs[label] = weights.pruned(config.edge_threshold)
        logger.info(
            "class %s: %s edges after pruning, objective %.6g, converged=%s",
            label,
            graphs[label].edge_count(),
            diag.final_objective,
            diag.converged,
        )
    return model_from_graphs(
        graphs,
        bandwidth,
        normalize=normalize,
        diagnostics=[diag for _, diag in results],
    )


def model_from_stream(
    state: StreamState,
    bandwidth: int | None = None,
    *,
    normalize: bool = False,
) -> ClassifierModel:
    """Filter bank built from the current online estimates of every class."""
    graphs = {label: state.edge_vector(label).pruned(state.config.edge_threshold) for label in state.classes}
    return model_from_graphs(graphs, bandwidth, normalize=normalize)


def lowpass_energy(model: ClassifierModel, label: Hashable, x: np.ndarray) -> float:
    coefficients = gft_project(model.basis(label), x)
    low = coefficients[: model.bandwidth]
    return float(low @ low)


def _pick(energies: dict[Hashable, float], classes: Sequence[Hashable]) -> tuple[Hashable, bool]:
    values = np.array([energies[label] for label in classes])
    best = float(values.max())
    close = np.flatnonzero(values >= best - TIE_RTOL * abs(best))
    return classes[int(close[0])], bool(close.size > 1)


def classify(model: ClassifierModel, x: np.ndarray) -> Classification:
    """Argmax of the per-class low-pass energies; ties go to the lowest class index."""
    energies = {label: lowpass_energy(model, label, x) for label in model.classes}
    label, tied = _pick(energies, model.classes)
    return Classification(label=label, energies=energies, tied=tied)


def classify_many(model: ClassifierModel, signals: SignalMatrix) -> list[Classification]:
    if signals.n != model.n:
        raise ClassifierError(f"signals have n={signals.n}, model has n={model.n}")
    low = {}
    for label, basis in zip(model.classes, model.bases, strict=True):
        coefficients = basis.eigenvectors[:, : model.bandwidth].T @ signals.data
        low[label] = np.sum(coefficients * coefficients, axis=0)
    results = []
    for column in range(signals.p):
        energies = {label: float(low[label][column]) for label in model.classes}
        label, tied = _pick(energies, model.classes)
        results.append(Classification(label=label, energies=energies, tied=tied))
    return results


def cumulative_relative_energy(basis: GftBasis, x: np.ndarray) -> np.ndarray:
    """Share of ||x||^2 carried by the first k GFT coefficients, for k = 1..N."""
    coefficients = gft_project(basis, x)
    energy = np.cumsum(coefficients * coefficients)
    total = energy[-1]
    if total <= 0.0:
        raise ClassifierError("cumulative relative energy is undefined for a zero signal")
    curve = np.minimum(energy / total, 1.0)
    curve[-1] = 1.0
    return curve


def spectral_profile(basis: GftBasis, signals: SignalMatrix) -> np.ndarray:
    """Mean GFT coefficient magnitude per frequency over the columns of `signals`."""
    if signals.n != basis.n:
        raise ClassifierError(f"signals have n={signals.n}, basis has n={basis.n}")
    if signals.p == 0:
        raise ClassifierError("spectral profile needs at least one signal")
    return np.mean(np.abs(basis.eigenvectors.T @ signals.data), axis=1)
