from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from graphlearn.experiments.classification import make_trial_data, run_classification
from graphlearn.experiments.config import ClassificationExperiment, expand_grid
from graphlearn.formats.tables import write_signals
from graphlearn.models.config import GraphSpec
from graphlearn.synth.generators import gen_graph, gen_smooth_signals


def _small(**overrides: object) -> ClassificationExperiment:
    params = {
        "classes": ["er:p=0.3", "ba:m=2"],
        "n": 12,
        "signals": 30,
        "sigmas": [0.1],
        "trials": 2,
        "seed": 3,
        "grid": [],
    }
    params.update(overrides)
    return ClassificationExperiment(**params)


def test_default_protocol_searches_beta_and_gamma() -> None:
    exp = ClassificationExperiment()
    configs = expand_grid(exp.learn, exp.grid)
    assert len(configs) == 9
    assert {config.gamma for config in configs} == {0.1, 0.3, 0.6}
    assert all(config.normalize_distances and config.alpha == 2.0 for config in configs)


def test_trial_data_is_reproducible() -> None:
    exp = _small()
    first, again = make_trial_data(exp, 0.1, 1), make_trial_data(exp, 0.1, 1)
    for label in (0, 1):
        assert (first.train[label].p, first.test[label].p) == (24, 6)
        np.testing.assert_array_equal(first.train[label].data, again.train[label].data)
        np.testing.assert_array_equal(first.truths[label].w, again.truths[label].w)
    other_trial = make_trial_data(exp, 0.1, 0)
    assert not np.array_equal(other_trial.train[0].data, first.train[0].data)


def test_noise_levels_share_graphs() -> None:
    exp = _small(sigmas=[0.0, 0.5])
    quiet, noisy = make_trial_data(exp, 0.0, 0), make_trial_data(exp, 0.5, 0)
    np.testing.assert_array_equal(quiet.truths[1].w, noisy.truths[1].w)


def test_small_synthetic_run() -> None:
    exp = _small(grid=[{"beta": 0.05}, {"beta": 0.5}])
    outcome = run_classification(exp, workers=2)

    assert len(outcome.results) == 4
    assert outcome.selected[0.1] in (0, 1)
    for result in outcome.results:
        assert 0.0 <= result.accuracy <= 1.0
        assert set(result.f_measures) == {0, 1}
        assert 0.0 <= result.discriminability <= 1.0

    rows = outcome.rows()
    assert sum(row["selected"] for row in rows) == 2
    assert {"f_measure_class_0", "f_measure_class_1", "accuracy"} <= set(rows[0])
    (summary,) = outcome.summary()
    assert summary["trials"] == 2
    assert summary["config"] == outcome.selected[0.1]
    assert outcome.representative().model is not None
    assert {row["basis_class"] for row in outcome.curves()} == {0, 1}


def test_worker_count_does_not_change_results() -> None:
    exp = _small(trials=1)
    serial = run_classification(exp, workers=1)
    threaded = run_classification(exp, workers=3)
    assert [r.accuracy for r in serial.results] == [r.accuracy for r in threaded.results]
    np.testing.assert_array_equal(
        serial.representative().model.graph(0).w, threaded.representative().model.graph(0).w
    )


def test_file_based_run(tmp_path: Path) -> None:
    paths = []
    for label, spec in enumerate([GraphSpec(kind="er", n=10, p=0.4, seed=1), GraphSpec(kind="ba", n=10, m=1, seed=2)]):
        signals = gen_smooth_signals(gen_graph(spec), 20, 0.05, seed=label)
        paths.append(write_signals(tmp_path / f"class_{label}.csv", signals))

    outcome = run_classification(_small(data=paths, trials=1, sigmas=[0.3]))
    (result,) = outcome.results
    assert result.sigma == 0.0
    assert result.f_measures == {}
    assert list(outcome.selected) == [0.0]


@pytest.mark.slow
def test_er_versus_ba_classification_at_scale() -> None:
    outcome = run_classification(ClassificationExperiment(sigmas=[0.1], seed=7), workers=4)
    (summary,) = outcome.summary()
    assert summary["gamma"] > 0
    assert summary["accuracy"] >= 0.9
    assert summary["discriminability"] >= 0.9


@pytest.mark.slow
def test_er_versus_ba_graph_recovery_at_scale() -> None:
    # At 100 signals per class the distance estimates cap edge recovery near F=0.5.
    exp = ClassificationExperiment(
        signals=1000,
        sigmas=[0.05],
        seed=7,
        select_by="f_measure",
        grid=[{"beta": beta, "gamma": 0.05} for beta in (0.0075, 0.015, 0.03, 0.06)],
    )
    (summary,) = run_classification(exp, workers=4).summary()
    assert summary["f_measure_class_0"] >= 0.75
    assert summary["f_measure_class_1"] >= 0.75
