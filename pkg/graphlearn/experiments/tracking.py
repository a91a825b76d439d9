"""
Dynamic-topology tracking protocol.

A single-class stream switches graphs at `switch_at` by rewiring a share of the edges. The online
learner runs over the whole stream first, keeping its state after every slot. A batch oracle
then solves every instantaneous problem F_t: the horizon is cut into `checkpoint_every`-slot
chunks solved concurrently, each chunk warm-starting slot by slot. The oracle solutions give the
optimum shifts v_t, the certified contraction factors and the checkpoint comparisons.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from graphlearn.evaluation.metrics import f_measure
from graphlearn.experiments.config import TrackingExperiment, expand_grid
from graphlearn.learning.batch import DiscriminativeProblem, learn_batch, objective
from graphlearn.learning.online import StepRecord, contraction_factor, ingest, new_state, warm_start
from graphlearn.learning.tracking import BoundSeries, TrackingCheckpoint, TrackingReport, certified_eta, tracking_bound
from graphlearn.models.config import LearnConfig
from graphlearn.models.graph import DistanceVector, EdgeVector
from graphlearn.synth.generators import SegmentTruth, gen_smooth_signals, gen_stream

logger = logging.getLogger(__name__)

STREAM_CLASS = 0


@dataclass
class TrackingRun:
    config: LearnConfig
    report: TrackingReport
    records: list[StepRecord]
    bounds: BoundSeries
    contractions: np.ndarray
    variations: np.ndarray
    initial_distance: float
    segments: list[SegmentTruth]
    online_graphs: dict[int, EdgeVector] = field(default_factory=dict)
    batch_graphs: dict[int, EdgeVector] = field(default_factory=dict)

    def step_rows(self) -> list[dict[str, Any]]:
        return [
            {
                "time": record.t,
                "step": record.step,
                "eta": record.eta,
                "contraction": record.contraction,
                "certified_contraction": float(self.contractions[index]),
                "variation": float(self.variations[index]),
                "bound": float(self.bounds.exact[index]),
                "simplified_bound": float(self.bounds.simplified[index]),
                "min_degree": record.min_degree,
                "below_d_min": record.below_d_min,
            }
            for index, record in enumerate(self.records)
        ]

    def final_f_measures(self) -> dict[int, tuple[float, float]]:
        """(online, batch) F-measure against ground truth at the end of each segment."""
        threshold = self.config.edge_threshold
        return {
            segment.index: (
                f_measure(self.online_graphs[segment.index], segment.graph, threshold),
                f_measure(self.batch_graphs[segment.index], segment.graph, threshold),
            )
            for segment in self.segments
        }

    def score(self) -> float:
        return float(np.mean([online for online, _ in self.final_f_measures().values()]))


def _oracle_config(exp: TrackingExperiment, config: LearnConfig) -> LearnConfig:
    return config.model_copy(
        update={"step": None, "tol": exp.oracle_tol, "max_iter": exp.oracle_max_iter, "accelerated": True}
    )


def _problem(z_bar: np.ndarray, config: LearnConfig, n: int) -> DiscriminativeProblem:
    return DiscriminativeProblem(own=DistanceVector(n=n, z=z_bar), others=(), config=config, n=n)


def _solve_chunk(
    z_history: list[np.ndarray],
    w_history: list[np.ndarray],
    times: range,
    config: LearnConfig,
    n: int,
) -> list[np.ndarray]:
    solutions = []
    start = w_history[times.start]
    for t in times:
        solution, diagnostics = learn_batch(_problem(z_history[t], config, n), start)
        if not diagnostics.converged:
            logger.warning("oracle at slot %s stopped after %s iterations", t, diagnostics.iterations)
        solutions.append(np.asarray(solution.w))
        start = solutions[-1]
    return solutions


def run_tracking(exp: TrackingExperiment, config: LearnConfig | None = None, *, workers: int = 1) -> TrackingRun:
    cfg = config or exp.learn
    n = exp.n
    stream = gen_stream(exp.stream_spec())
    segments = list(stream.segments)

    state = new_state(
        n, [STREAM_CLASS], cfg, exp.memory_mode(), inner_iters=exp.inner_iters, step_scale=exp.step_scale
    )
    if exp.warmup_signals:
        warm = gen_smooth_signals(segments[0].graph, exp.warmup_signals, exp.sigma, exp.seed + len(segments))
        warm_start(state, STREAM_CLASS, warm)

    z_history = [state.z_bar[STREAM_CLASS].copy()]
    w_history = [state.w[STREAM_CLASS].copy()]
    records: list[StepRecord] = []
    for sample in stream:
        records.append(ingest(state, STREAM_CLASS, sample.x))
        z_history.append(state.z_bar[STREAM_CLASS].copy())
        w_history.append(state.w[STREAM_CLASS].copy())
    horizon = len(records)
    logger.info("online pass done: %s slots, final min degree %.4g", horizon, records[-1].min_degree)

    oracle_cfg = _oracle_config(exp, cfg)
    every = exp.checkpoint_every
    chunks = [range(start, min(start + every, horizon + 1)) for start in range(0, horizon + 1, every)]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        solved = list(executor.map(lambda times: _solve_chunk(z_history, w_history, times, oracle_cfg, n), chunks))
    w_star = [solution for chunk in solved for solution in chunk]

    variations = np.array([np.linalg.norm(w_star[t] - w_star[t - 1]) for t in range(1, horizon + 1)])
    contractions = np.empty(horizon)
    for index, record in enumerate(records):
        t = index + 1
        eta = certified_eta(cfg, n, w_history[t - 1], w_history[t], w_star[t], floor_degree=record.min_degree)
        contractions[index] = contraction_factor(record.step, cfg.beta, eta)
    initial_distance = float(np.linalg.norm(w_history[0] - w_star[0]))
    bounds = tracking_bound(
        contractions, variations, initial_distance, inner_iters=[record.inner_iters for record in records]
    )

    checkpoint_times = sorted(set(range(every, horizon + 1, every)) | {s.stop for s in segments})
    report = TrackingReport(degenerate=bounds.degenerate)
    for t in checkpoint_times:
        segment = stream.truth_at(t - 1)
        problem = _problem(z_history[t], oracle_cfg, n)
        online = EdgeVector(n=n, w=w_history[t])
        batch = EdgeVector(n=n, w=w_star[t])
        report.checkpoints.append(
            TrackingCheckpoint(
                time=t,
                online_objective=objective(online, problem),
                batch_objective=objective(batch, problem),
                distance=float(np.linalg.norm(w_history[t] - w_star[t])),
                bound=float(bounds.exact[t - 1]),
                simplified_bound=float(bounds.simplified[t - 1]),
                eta=certified_eta(cfg, n, w_history[t], w_star[t]),
                f_measure_online=f_measure(online, segment.graph, cfg.edge_threshold),
                f_measure_batch=f_measure(batch, segment.graph, cfg.edge_threshold),
                segment=segment.index,
                settled=t - segment.start >= exp.settle,
            )
        )

    violations = report.violations()
    if violations:
        logger.warning("tracking bound violated at %s checkpoints", len(violations))
    objective_violations = report.objective_violations()
    if objective_violations:
        logger.warning("objective gap exceeds eta / 2 times the distance at %s checkpoints", len(objective_violations))
    return TrackingRun(
        config=cfg,
        report=report,
        records=records,
        bounds=bounds,
        contractions=contractions,
        variations=variations,
        initial_distance=initial_distance,
        segments=segments,
        online_graphs={s.index: EdgeVector(n=n, w=w_history[s.stop]) for s in segments},
        batch_graphs={s.index: EdgeVector(n=n, w=w_star[s.stop]) for s in segments},
    )


@dataclass
class TrackingSearch:
    configs: list[LearnConfig]
    scores: list[float]
    selected: int
    best: TrackingRun

    def rows(self) -> list[dict[str, Any]]:
        return [
            {
                "config": index,
                "alpha": config.alpha,
                "beta": config.beta,
                "gamma": config.gamma,
                "f_measure": score,
                "selected": index == self.selected,
            }
            for index, (config, score) in enumerate(zip(self.configs, self.scores, strict=True))
        ]


def search_tracking(exp: TrackingExperiment, *, workers: int = 1) -> TrackingSearch:
    """Run every grid configuration and keep the one with the best mean final online F-measure."""
    configs = expand_grid(exp.learn, exp.grid)
    best: TrackingRun | None = None
    scores: list[float] = []
    selected = 0
    for index, config in enumerate(configs):
        run = run_tracking(exp, config, workers=workers)
        scores.append(run.score())
        logger.info("tracking config %s (beta=%s): mean final F-measure %.4f", index, config.beta, scores[-1])
        if best is None or scores[-1] > scores[selected]:
            best, selected = run, index
    assert best is not None
    return TrackingSearch(configs=configs, scores=scores, selected=selected, best=best)
