"""
Supervised classification protocol: generate (or load) per-class signals, split them into
train/test sets, fit the filter-bank classifier for every grid configuration, and score test
accuracy, per-class edge F-measure and spectral discriminability.

Trials are independent and run on a thread pool; results are ordered by (sigma, config, trial)
so the output does not depend on the worker count.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from graphlearn.classification.filter_bank import (
    ClassifierModel,
    classify_many,
    cumulative_relative_energy,
    default_bandwidth,
    fit,
    spectral_profile,
)
from graphlearn.evaluation.metrics import accuracy, f_measure
from graphlearn.experiments.config import ClassificationExperiment, ExperimentConfigError, expand_grid
from graphlearn.formats.tables import read_signals
from graphlearn.models.config import LearnConfig
from graphlearn.models.graph import EdgeVector, SignalMatrix
from graphlearn.synth.generators import gen_graph, gen_perturbed_signals, gen_smooth_signals, parse_graph_spec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrialData:
    sigma: float
    trial: int
    train: dict[int, SignalMatrix]
    test: dict[int, SignalMatrix]
    truths: dict[int, EdgeVector] | None = None


@dataclass
class TrialResult:
    sigma: float
    config_index: int
    trial: int
    accuracy: float
    f_measures: dict[int, float] = field(default_factory=dict)
    discriminability: float | None = None
    ties: int = 0
    model: ClassifierModel | None = field(default=None, repr=False)
    curves: list[dict[str, Any]] = field(default_factory=list, repr=False)

    def to_row(self, config: LearnConfig) -> dict[str, Any]:
        row: dict[str, Any] = {
            "sigma": self.sigma,
            "config": self.config_index,
            "alpha": config.alpha,
            "beta": config.beta,
            "gamma": config.gamma,
            "trial": self.trial,
            "accuracy": self.accuracy,
            "discriminability": self.discriminability,
            "ties": self.ties,
        }
        row.update({f"f_measure_class_{label}": value for label, value in sorted(self.f_measures.items())})
        return row


@dataclass
class ClassificationOutcome:
    configs: list[LearnConfig]
    results: list[TrialResult]
    selected: dict[float, int]

    def rows(self) -> list[dict[str, Any]]:
        rows = []
        for result in self.results:
            row = result.to_row(self.configs[result.config_index])
            row["selected"] = self.selected[result.sigma] == result.config_index
            rows.append(row)
        return rows

    def summary(self) -> list[dict[str, Any]]:
        """Mean scores of the selected configuration at each noise level."""
        rows = []
        for sigma, index in self.selected.items():
            chosen = [r for r in self.results if r.sigma == sigma and r.config_index == index]
            config = self.configs[index]
            row: dict[str, Any] = {
                "sigma": sigma,
                "config": index,
                "alpha": config.alpha,
                "beta": config.beta,
                "gamma": config.gamma,
                "trials": len(chosen),
                "accuracy": float(np.mean([r.accuracy for r in chosen])),
            }
            labels = sorted({label for r in chosen for label in r.f_measures})
            for label in labels:
                row[f"f_measure_class_{label}"] = float(np.mean([r.f_measures[label] for r in chosen]))
            scores = [r.discriminability for r in chosen if r.discriminability is not None]
            row["discriminability"] = float(np.mean(scores)) if scores else None
            rows.append(row)
        return rows

    def curves(self) -> list[dict[str, Any]]:
        return [row for r in self.results if self.selected[r.sigma] == r.config_index for row in r.curves]

    def representative(self) -> TrialResult:
        """Trial 0 of the selected configuration at the first noise level."""
        sigma = next(iter(self.selected))
        return next(r for r in self.results if r.sigma == sigma and r.config_index == self.selected[sigma])


def _child_seed(*entropy: int) -> int:
    return int(np.random.SeedSequence(list(entropy)).generate_state(1)[0])


def _split(data: SignalMatrix, train_fraction: float, seed: int) -> tuple[SignalMatrix, SignalMatrix]:
    order = np.random.default_rng(seed).permutation(data.p)
    cut = int(math.floor(train_fraction * data.p))
    if cut < 1 or cut >= data.p:
        raise ExperimentConfigError(f"train fraction {train_fraction} leaves an empty split of {data.p} signals")
    return data.columns(sorted(order[:cut])), data.columns(sorted(order[cut:]))


def make_trial_data(exp: ClassificationExperiment, sigma: float, trial: int) -> TrialData:
    """Graphs and signals for one trial; the same seeds are reused across noise levels."""
    train: dict[int, SignalMatrix] = {}
    test: dict[int, SignalMatrix] = {}
    if not exp.synthetic:
        for label, path in enumerate(exp.data):
            seed = _child_seed(exp.seed, trial, label)
            train[label], test[label] = _split(read_signals(path), exp.train_fraction, seed)
        return TrialData(sigma=sigma, trial=trial, train=train, test=test)

    truths: dict[int, EdgeVector] = {}
    for label, text in enumerate(exp.classes):
        spec = parse_graph_spec(text, exp.n, seed=_child_seed(exp.seed, trial, label, 0))
        graph = gen_graph(spec)
        signal_seed = _child_seed(exp.seed, trial, label, 1)
        if exp.rewire_per_signal is None:
            signals = gen_smooth_signals(graph, exp.signals, sigma, signal_seed)
            truths[label] = graph
        else:
            signals = gen_perturbed_signals(graph, exp.signals, exp.rewire_per_signal, sigma, signal_seed)
        train[label], test[label] = _split(signals, exp.train_fraction, _child_seed(exp.seed, trial, label, 2))
    return TrialData(sigma=sigma, trial=trial, train=train, test=test, truths=truths or None)


def _energy_curves(model: ClassifierModel, data: TrialData) -> list[dict[str, Any]]:
    rows = []
    for label, signals in data.test.items():
        for basis_label, basis in zip(model.classes, model.bases, strict=True):
            curves = np.array([cumulative_relative_energy(basis, signals.signal(i)) for i in range(signals.p)])
            profile = spectral_profile(basis, signals)
            for k in range(basis.n):
                rows.append(
                    {
                        "sigma": data.sigma,
                        "trial": data.trial,
                        "signal_class": label,
                        "basis_class": basis_label,
                        "k": k + 1,
                        "cumulative_energy": float(curves[:, k].mean()),
                        "mean_abs_coefficient": float(profile[k]),
                    }
                )
    return rows


def _discriminability(model: ClassifierModel, data: TrialData) -> float:
    """Share of test signals whose low-band energy share is largest on their own class basis."""
    wins = total = 0
    k = model.bandwidth - 1
    for label, signals in data.test.items():
        for i in range(signals.p):
            x = signals.signal(i)
            shares = {
                c: cumulative_relative_energy(basis, x)[k] for c, basis in zip(model.classes, model.bases, strict=True)
            }
            wins += all(shares[label] > share for c, share in shares.items() if c != label)
            total += 1
    return wins / total


def run_trial(
    exp: ClassificationExperiment,
    data: TrialData,
    config: LearnConfig,
    config_index: int,
    *,
    keep_model: bool = False,
) -> TrialResult:
    n = next(iter(data.train.values())).n
    model = fit(data.train, config, exp.bandwidth or default_bandwidth(n), normalize=exp.normalize)
    labels = sorted(data.test)
    test = SignalMatrix(data=np.hstack([data.test[label].data for label in labels]))
    actual = [label for label in labels for _ in range(data.test[label].p)]
    predictions = classify_many(model, test)
    result = TrialResult(
        sigma=data.sigma,
        config_index=config_index,
        trial=data.trial,
        accuracy=accuracy([p.label for p in predictions], actual),
        ties=sum(p.tied for p in predictions),
        discriminability=_discriminability(model, data),
        model=model if keep_model else None,
        curves=_energy_curves(model, data),
    )
    if data.truths is not None:
        for label in labels:
            result.f_measures[label] = f_measure(model.graph(label), data.truths[label], config.edge_threshold)
    return result


def _selection_key(results: Sequence[TrialResult], select_by: str) -> tuple[float, float]:
    mean_accuracy = float(np.mean([r.accuracy for r in results]))
    scores = [value for r in results for value in r.f_measures.values()]
    mean_f = float(np.mean(scores)) if scores else 0.0
    return (mean_f, mean_accuracy) if select_by == "f_measure" else (mean_accuracy, mean_f)


def run_classification(exp: ClassificationExperiment, *, workers: int = 1) -> ClassificationOutcome:
    """Grid search per noise level; the selected config maximizes accuracy (or F-measure), first wins ties."""
    configs = expand_grid(exp.learn, exp.grid)
    if not exp.synthetic:
        sizes = {read_signals(path).n for path in exp.data}
        if len(sizes) != 1:
            raise ExperimentConfigError(f"class signal files disagree on n: {sorted(sizes)}")
    levels = exp.sigmas if exp.synthetic else [0.0]
    jobs = []
    for sigma in levels:
        for trial in range(exp.trials):
            data = make_trial_data(exp, sigma, trial)
            for index, config in enumerate(configs):
                jobs.append((data, config, index))

    def work(job: tuple[TrialData, LearnConfig, int]) -> TrialResult:
        data, config, index = job
        return run_trial(exp, data, config, index, keep_model=data.trial == 0)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        results = list(executor.map(work, jobs))

    selected: dict[float, int] = {}
    for sigma in levels:
        keys = [
            _selection_key([r for r in results if r.sigma == sigma and r.config_index == index], exp.select_by)
            for index in range(len(configs))
        ]
        selected[sigma] = max(range(len(configs)), key=lambda index: (keys[index], -index))
        logger.info("sigma=%s: selected config %s (%s)", sigma, selected[sigma], keys[selected[sigma]])
    return ClassificationOutcome(configs=configs, results=results, selected=selected)
