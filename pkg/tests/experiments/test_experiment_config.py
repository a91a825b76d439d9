from __future__ import annotations

from pathlib import Path

import pytest

from graphlearn.experiments.config import (
    BatchRun,
    ClassificationExperiment,
    ExperimentConfigError,
    OnlineRun,
    SynthRun,
    TrackingExperiment,
    expand_grid,
    resolve,
)
from graphlearn.models.config import GraphSpec, LearnConfig, MemoryMode


def test_config_document_overrides_flags() -> None:
    exp = resolve(
        TrackingExperiment,
        {"n": 20, "switch_at": 50, "theta": None},
        {"switch_at": 80, "learn": {"beta": 0.3}},
    )
    assert (exp.n, exp.switch_at, exp.total_horizon) == (20, 80, 160)
    assert exp.learn.beta == 0.3
    assert exp.learn.alpha == 1.0
    assert exp.memory_mode() == MemoryMode.ema(0.003)


def test_nested_overrides_merge_key_by_key() -> None:
    run = resolve(BatchRun, {"signals": "x.csv", "learn": {"alpha": 2.0, "beta": 0.5}}, {"learn": {"beta": 0.25}})
    assert run.signals == Path("x.csv")
    assert (run.learn.alpha, run.learn.beta) == (2.0, 0.25)


@pytest.mark.parametrize(
    ("model", "flags"),
    [
        (TrackingExperiment, {"switch_at": 100, "horizon": 100}),
        (TrackingExperiment, {"memory": "ema:1.5"}),
        (ClassificationExperiment, {"sigmas": [0.1, 0.1]}),
        (ClassificationExperiment, {"sigmas": [-0.1]}),
        (ClassificationExperiment, {"data": ["only.csv"]}),
        (ClassificationExperiment, {"n": 10, "bandwidth": 11}),
        (OnlineRun, {"stream": "s.ndjson", "memory": "window:3"}),
        (SynthRun, {"unknown": 1}),
    ],
)
def test_invalid_configurations(model: type, flags: dict) -> None:
    with pytest.raises(ExperimentConfigError):
        resolve(model, flags)


def test_expand_grid() -> None:
    base = LearnConfig(beta=0.1)
    assert expand_grid(base, []) == [base]
    configs = expand_grid(base, [{"beta": 0.5}, {"gamma": 0.2, "accelerated": True}])
    assert [(c.beta, c.gamma, c.accelerated) for c in configs] == [(0.5, 0.0, False), (0.1, 0.2, True)]
    with pytest.raises(ExperimentConfigError):
        expand_grid(base, [{"beta": -1.0}])
    with pytest.raises(ExperimentConfigError):
        expand_grid(base, [{"momentum": 0.9}])


def test_synth_stream_segments() -> None:
    spec = GraphSpec(kind="er", n=10, p=0.3, seed=2)
    single = resolve(SynthRun, {"stream": True, "horizon": 40}).stream_spec(spec)
    assert [s.duration for s in single.segments] == [40]

    switching = resolve(SynthRun, {"stream": True, "horizon": 40, "switch_at": 15, "seed": 2}).stream_spec(spec)
    assert [s.duration for s in switching.segments] == [15, 25]
    assert switching.segments[1].rewire_seed == 3
    assert switching.horizon == 40


def test_tracking_stream_spec() -> None:
    exp = TrackingExperiment(n=12, switch_at=30, horizon=45, rewire=0.2, seed=5)
    spec = exp.stream_spec()
    assert [s.duration for s in spec.segments] == [30, 15]
    assert spec.segments[0].graph == GraphSpec(kind="er", n=12, p=0.1, seed=5)
    assert spec.segments[1].rewire == 0.2
    assert exp.memory_mode() == MemoryMode.ema(0.003)
    assert TrackingExperiment(memory="sliding:20").memory_mode() == MemoryMode.sliding(20)
