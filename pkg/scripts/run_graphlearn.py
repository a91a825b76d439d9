#!/usr/bin/env python3
"""
graphlearn command line.

    python -m scripts.run_graphlearn synth --graph er:p=0.1 --n 30 --signals 100 --out runs/synth
    python -m scripts.run_graphlearn fit-classify --classes er:p=0.1,ba:m=3 --n 60 --sigma 0.5 --seed 7
    python -m scripts.run_graphlearn track-experiment --n 30 --p 0.1 --switch-at 2000 --theta 0.003

Every subcommand writes into a staging directory and moves it to `--out` only on success, together
with a manifest.json describing the resolved configuration.
"""

from __future__ import annotations

import argparse
import logging
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any

import numpy as np

from graphlearn.classification.filter_bank import ClassifierError, classify_many
from graphlearn.evaluation.metrics import (
    MetricError,
    algebraic_connectivity,
    f_measure,
    precision_recall,
    relative_temporal_deviation,
    series_transform,
)
from graphlearn.experiments.classification import make_trial_data, run_classification
from graphlearn.experiments.config import (
    BatchRun,
    ClassificationExperiment,
    EvalRun,
    ExperimentConfigError,
    OnlineRun,
    SynthRun,
    TrackingExperiment,
    TransformRun,
    resolve,
)
from graphlearn.experiments.tracking import search_tracking
from graphlearn.formats.documents import save_model, write_json
from graphlearn.formats.streams import read_stream, write_stream
from graphlearn.formats.tables import (
    FormatError,
    classification_rows,
    load_prices,
    read_edge_list,
    read_signals,
    write_edge_list,
    write_prices,
    write_rows,
    write_signals,
)
from graphlearn.graph.core import GraphInputError, degrees, distance_vector
from graphlearn.learning.batch import DegenerateDegreeError, LearnerInputError, build_problem, learn_batch
from graphlearn.learning.online import StreamError, ingest, new_state, warm_start
from graphlearn.models.graph import SignalMatrix
from graphlearn.synth.generators import (
    GeneratorError,
    StreamSample,
    gen_graph_with_retries,
    gen_perturbed_signals,
    gen_smooth_signals,
    gen_stream,
    parse_graph_spec,
)
from graphlearn.utils.env import load_env
from scripts._cli_common import (
    add_common_args,
    add_learn_args,
    configure_logging,
    grid_flag,
    learn_flags,
    load_config_document,
    resolve_out_dir,
    resolve_workers,
    staged_output,
    write_manifest,
)

logger = logging.getLogger("graphlearn.cli")

HANDLED_ERRORS = (
    ExperimentConfigError,
    FormatError,
    GeneratorError,
    MetricError,
    ClassifierError,
    LearnerInputError,
    DegenerateDegreeError,
    StreamError,
    GraphInputError,
)
REPORT_COLUMNS = [
    "time",
    "segment",
    "settled",
    "distance",
    "bound",
    "simplified_bound",
    "online_objective",
    "batch_objective",
    "objective_gap",
    "relative_gap",
    "eta",
    "f_measure_online",
    "f_measure_batch",
]


def _summary(stage: str, **fields: Any) -> str:
    parts = " ".join(f"{key}={_fmt(value)}" for key, value in fields.items())
    return f"{stage} summary {parts}"


def _fmt(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _parse_args(argv: list[str]) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="run_graphlearn",
        description="Learn discriminative graph topologies from smooth graph signals.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="Generate a random graph with smooth signals, or a signal stream.")
    synth.add_argument("--graph", default=None, help="Graph family, e.g. er:p=0.1 or ba:m=3.")
    synth.add_argument("--n", type=int, default=None, help="Number of nodes.")
    synth.add_argument("--signals", type=int, default=None, help="Number of signals (stream horizon by default).")
    synth.add_argument("--sigma", type=float, default=None, help="Additive noise standard deviation.")
    synth.add_argument("--seed", type=int, default=None)
    synth.add_argument("--perturb", type=float, default=None, help="Rewire this share of edges per signal.")
    synth.add_argument("--stream", action="store_true", default=None, help="Write an NDJSON stream instead.")
    synth.add_argument("--switch-at", dest="switch_at", type=int, default=None, help="Stream topology switch time.")
    synth.add_argument("--horizon", type=int, default=None, help="Stream length.")
    synth.add_argument("--rewire", type=float, default=None, help="Share of edges moved at the switch.")
    add_common_args(synth)

    batch = sub.add_parser("learn-batch", help="Learn one class graph from a signal file.")
    batch.add_argument("--signals", type=Path, default=None, help="CSV with one signal per row (the learned class).")
    batch.add_argument("--other", dest="others", type=Path, action="append", default=None, help="Other-class CSV.")
    add_learn_args(batch)
    add_common_args(batch)

    classify = sub.add_parser("fit-classify", help="Train and evaluate the graph filter-bank classifier.")
    classify.add_argument("--classes", default=None, help="Comma-separated graph families, one per class.")
    classify.add_argument("--data", type=Path, action="append", default=None, help="Per-class signal CSV.")
    classify.add_argument("--n", type=int, default=None)
    classify.add_argument("--signals", type=int, default=None, help="Signals per class.")
    classify.add_argument("--sigma", dest="sigmas", type=float, action="append", default=None, help="Repeatable.")
    classify.add_argument("--train-fraction", dest="train_fraction", type=float, default=None)
    classify.add_argument("--trials", type=int, default=None)
    classify.add_argument("--seed", type=int, default=None)
    classify.add_argument("--bandwidth", type=int, default=None, help="Low-pass bandwidth (default n/3).")
    classify.add_argument("--normalize", action="store_true", default=None, help="Unit-norm graphs before the GFT.")
    classify.add_argument("--rewire-per-signal", dest="rewire_per_signal", type=float, default=None)
    classify.add_argument("--select-by", dest="select_by", choices=["accuracy", "f_measure"], default=None)
    add_learn_args(classify)
    add_common_args(classify)

    online = sub.add_parser("learn-online", help="Track per-class graphs over an NDJSON signal stream.")
    online.add_argument("--stream", type=Path, default=None)
    online.add_argument("--memory", default=None, help="ema:<theta>, sliding:<window> or infinite.")
    online.add_argument("--inner-iters", dest="inner_iters", type=int, default=None)
    online.add_argument("--step-scale", dest="step_scale", type=float, default=None)
    online.add_argument("--warmup", type=int, default=None, help="Leading signals per class used to warm start.")
    online.add_argument("--snapshot-every", dest="snapshot_every", type=int, default=None)
    add_learn_args(online)
    add_common_args(online)

    track = sub.add_parser("track-experiment", help="Online tracking of a switching topology against a batch oracle.")
    track.add_argument("--n", type=int, default=None)
    track.add_argument("--p", type=float, default=None, help="Erdos-Renyi edge probability.")
    track.add_argument("--switch-at", dest="switch_at", type=int, default=None)
    track.add_argument("--horizon", type=int, default=None)
    track.add_argument("--rewire", type=float, default=None)
    track.add_argument("--sigma", type=float, default=None)
    track.add_argument("--theta", type=float, default=None, help="EMA forgetting factor.")
    track.add_argument("--memory", default=None, help="Overrides --theta, e.g. sliding:500.")
    track.add_argument("--inner-iters", dest="inner_iters", type=int, default=None)
    track.add_argument("--step-scale", dest="step_scale", type=float, default=None)
    track.add_argument("--warmup-signals", dest="warmup_signals", type=int, default=None)
    track.add_argument("--settle", type=int, default=None)
    track.add_argument("--checkpoint-every", dest="checkpoint_every", type=int, default=None)
    track.add_argument("--seed", type=int, default=None)
    add_learn_args(track)
    add_common_args(track)

    evaluate = sub.add_parser("eval", help="Compare an estimated edge list with the ground truth.")
    evaluate.add_argument("--estimate", type=Path, default=None)
    evaluate.add_argument("--truth", type=Path, default=None)
    evaluate.add_argument("--previous", type=Path, default=None, help="Earlier estimate for the temporal deviation.")
    evaluate.add_argument("--threshold", type=float, default=None)
    add_common_args(evaluate)

    transform = sub.add_parser("transform", help="Turn a price table into graph signals.")
    transform.add_argument("--prices", type=Path, default=None)
    transform.add_argument("--mode", choices=["log", "rdtv"], default=None)
    add_common_args(transform)

    return parser.parse_args(argv)


def _with_learn(args: argparse.Namespace, flags: dict[str, Any], *, grid: bool = False) -> dict[str, Any]:
    learn = learn_flags(args)
    if learn:
        flags["learn"] = learn
    if grid:
        flags["grid"] = grid_flag(args)
    return flags


def _synth(args: argparse.Namespace, out: Path, workers: int) -> tuple[SynthRun, str]:
    flags = {
        key: getattr(args, key)
        for key in ("graph", "n", "signals", "sigma", "seed", "perturb", "stream", "switch_at", "horizon", "rewire")
    }
    cfg = resolve(SynthRun, flags, load_config_document(args.config))
    spec = parse_graph_spec(cfg.graph, cfg.n, seed=cfg.seed)

    if cfg.stream:
        stream = gen_stream(cfg.stream_spec(spec))
        count = write_stream(out / "stream.ndjson", stream)
        for segment in stream.segments:
            write_edge_list(out / f"truth_segment_{segment.index}.csv", segment.graph)
        write_json(
            out / "segments.json",
            {
                "horizon": stream.horizon,
                "segments": [
                    {
                        "index": s.index,
                        "start": s.start,
                        "stop": s.stop,
                        "draws": s.draws,
                        "edges": s.graph.edge_count(),
                    }
                    for s in stream.segments
                ],
            },
        )
        return cfg, _summary("SYNTH", nodes=cfg.n, samples=count, segments=len(stream.segments))

    graph, draws = gen_graph_with_retries(spec)
    if cfg.perturb is None:
        signals = gen_smooth_signals(graph, cfg.signals, cfg.sigma, cfg.seed + 1)
    else:
        signals = gen_perturbed_signals(graph, cfg.signals, cfg.perturb, cfg.sigma, cfg.seed + 1)
    write_edge_list(out / "graph.csv", graph)
    write_signals(out / "signals.csv", signals)
    return cfg, _summary("SYNTH", nodes=cfg.n, edges=graph.edge_count(), signals=signals.p, draws=draws)


def _learn_batch(args: argparse.Namespace, out: Path, workers: int) -> tuple[BatchRun, str]:
    flags = _with_learn(args, {"signals": args.signals, "others": args.others})
    cfg = resolve(BatchRun, flags, load_config_document(args.config))
    datasets = [read_signals(cfg.signals), *(read_signals(path) for path in cfg.others)]
    distances = {label: distance_vector(signals) for label, signals in enumerate(datasets)}
    counts = {label: signals.p for label, signals in enumerate(datasets)}
    problem = build_problem(distances, 0, cfg.learn, counts=counts)
    weights, diagnostics = learn_batch(problem)

    pruned = weights.pruned(cfg.learn.edge_threshold)
    write_edge_list(out / "edges.csv", pruned)
    write_json(out / "diagnostics.json", {**diagnostics.to_dict(), "edges": pruned.edge_count()})
    if not diagnostics.converged:
        logger.warning("batch learner stopped after %s iterations without converging", diagnostics.iterations)
    return cfg, _summary(
        "LEARN",
        iterations=diagnostics.iterations,
        converged=diagnostics.converged,
        edges=pruned.edge_count(),
        objective=diagnostics.final_objective,
    )


def _fit_classify(args: argparse.Namespace, out: Path, workers: int) -> tuple[ClassificationExperiment, str]:
    flags = {
        "classes": [text.strip() for text in args.classes.split(",") if text.strip()] if args.classes else None,
        "data": args.data,
        "n": args.n,
        "signals": args.signals,
        "sigmas": args.sigmas,
        "train_fraction": args.train_fraction,
        "trials": args.trials,
        "seed": args.seed,
        "bandwidth": args.bandwidth,
        "normalize": args.normalize,
        "rewire_per_signal": args.rewire_per_signal,
        "select_by": args.select_by,
    }
    cfg = resolve(ClassificationExperiment, _with_learn(args, flags, grid=True), load_config_document(args.config))
    outcome = run_classification(cfg, workers=workers)

    write_rows(out / "results.csv", outcome.rows())
    summary = outcome.summary()
    write_rows(out / "summary.csv", summary)
    write_rows(out / "curves.csv", outcome.curves())

    chosen = outcome.representative()
    model = chosen.model
    assert model is not None
    save_model(out / "model.json", model)
    for label in model.classes:
        write_edge_list(out / f"edges_class_{label}.csv", model.graph(label))

    data = make_trial_data(cfg, chosen.sigma, chosen.trial)
    if data.truths is not None:
        for label, truth in data.truths.items():
            write_edge_list(out / f"truth_class_{label}.csv", truth)
    labels = sorted(data.test)
    test = SignalMatrix(data=np.hstack([data.test[label].data for label in labels]))
    predictions = [(p.label, p.energies) for p in classify_many(model, test)]
    rows = classification_rows(predictions, model.classes)
    actual = [label for label in labels for _ in range(data.test[label].p)]
    for row, label in zip(rows, actual, strict=True):
        row["actual"] = label
    write_rows(out / "classification.csv", rows)

    head = summary[0]
    scores = {key: value for key, value in head.items() if key.startswith("f_measure_class_")}
    return cfg, _summary("CLASSIFY", sigma=head["sigma"], config=head["config"], accuracy=head["accuracy"], **scores)


def _learn_online(args: argparse.Namespace, out: Path, workers: int) -> tuple[OnlineRun, str]:
    flags = {
        key: getattr(args, key)
        for key in ("stream", "memory", "inner_iters", "step_scale", "warmup", "snapshot_every")
    }
    cfg = resolve(OnlineRun, _with_learn(args, flags), load_config_document(args.config))

    records = list(read_stream(cfg.stream))
    if not records:
        raise FormatError(f"{cfg.stream}: the stream is empty")
    classes = sorted({record.label for record in records})
    n = len(records[0].x)
    state = new_state(
        n, classes, cfg.learn, cfg.memory_mode(), inner_iters=cfg.inner_iters, step_scale=cfg.step_scale
    )

    snapshots = out / "snapshots"
    snapshots.mkdir()
    threshold = cfg.learn.edge_threshold

    def snapshot() -> None:
        for label in classes:
            stem = snapshots / f"t{state.t:06d}_class{label}"
            write_edge_list(stem.with_suffix(".csv"), state.edge_vector(label), threshold)
            last = state.last_record
            write_json(
                stem.with_suffix(".json"),
                {
                    "t": state.t,
                    "objective": state.objective(label),
                    "step": last.step if last is not None else None,
                    "min_degree": float(np.min(degrees(state.w[label]))),
                },
            )

    buffers: dict[int, list[np.ndarray]] = {label: [] for label in classes}
    warmed = {label: cfg.warmup == 0 for label in classes}
    steps = []
    for record in records:
        label = record.label
        if not warmed[label]:
            buffers[label].append(record.signal())
            if len(buffers[label]) == cfg.warmup:
                warm_start(state, label, buffers.pop(label))
                warmed[label] = True
            continue
        step = ingest(state, label, record.signal())
        steps.append(
            {
                "time": step.t,
                "stream_t": record.t,
                "class": label,
                "step": step.step,
                "eta": step.eta,
                "contraction": step.contraction,
                "min_degree": step.min_degree,
                "below_d_min": step.below_d_min,
                "objective": state.objective(label),
            }
        )
        if step.t % cfg.snapshot_every == 0:
            snapshot()
    for label, pending in buffers.items():
        if pending and not warmed[label]:
            logger.warning("class %s has %s signals, fewer than the warm-up of %s", label, len(pending), cfg.warmup)
            warm_start(state, label, pending)
    if state.t % cfg.snapshot_every != 0 or state.t == 0:
        snapshot()

    write_rows(out / "steps.csv", steps)
    for label in classes:
        write_edge_list(out / f"edges_class{label}.csv", state.edge_vector(label), threshold)
    below = sum(row["below_d_min"] for row in steps)
    return cfg, _summary("ONLINE", slots=state.t, classes=len(classes), nodes=n, below_d_min=below)


def _track(args: argparse.Namespace, out: Path, workers: int) -> tuple[TrackingExperiment, str]:
    flags = {
        key: getattr(args, key)
        for key in (
            "n",
            "p",
            "switch_at",
            "horizon",
            "rewire",
            "sigma",
            "theta",
            "memory",
            "inner_iters",
            "step_scale",
            "warmup_signals",
            "settle",
            "checkpoint_every",
            "seed",
        )
    }
    cfg = resolve(TrackingExperiment, _with_learn(args, flags, grid=True), load_config_document(args.config))
    search = search_tracking(cfg, workers=workers)
    run = search.best

    write_rows(out / "report.csv", run.report.rows(), REPORT_COLUMNS)
    write_rows(out / "steps.csv", run.step_rows())
    if len(search.configs) > 1:
        write_rows(out / "grid.csv", search.rows())
    threshold = run.config.edge_threshold
    for segment in run.segments:
        write_edge_list(out / f"truth_segment_{segment.index}.csv", segment.graph)
        write_edge_list(out / f"edges_online_segment_{segment.index}.csv", run.online_graphs[segment.index], threshold)
        write_edge_list(out / f"edges_batch_segment_{segment.index}.csv", run.batch_graphs[segment.index], threshold)

    finals = run.final_f_measures()
    violations = run.report.violations()
    settled = [c.relative_gap for c in run.report.checkpoints if c.settled]
    max_gap = float(max(settled)) if settled else float("nan")
    write_json(
        out / "summary.json",
        {
            "selected_config": search.selected,
            "violations": [c.time for c in violations],
            "objective_violations": [c.time for c in run.report.objective_violations()],
            "degenerate": run.report.degenerate,
            "max_settled_relative_gap": max_gap,
            "final_f_measure": {
                str(index): {"online": online, "batch": batch} for index, (online, batch) in finals.items()
            },
        },
    )
    fields = {f"f_online_segment_{index}": online for index, (online, _) in finals.items()}
    return cfg, _summary(
        "TRACK",
        checkpoints=len(run.report.checkpoints),
        violations=len(violations),
        max_relative_gap=max_gap,
        **fields,
    )


def _eval(args: argparse.Namespace, out: Path, workers: int) -> tuple[EvalRun, str]:
    flags = {key: getattr(args, key) for key in ("estimate", "truth", "previous", "threshold")}
    cfg = resolve(EvalRun, flags, load_config_document(args.config))
    estimate = read_edge_list(cfg.estimate)
    truth = read_edge_list(cfg.truth, n=estimate.n)
    precision, recall = precision_recall(estimate, truth, cfg.threshold)
    f_score = f_measure(estimate, truth, cfg.threshold)
    row: dict[str, Any] = {
        "precision": precision,
        "recall": recall,
        "f_measure": f_score,
        "edges_estimate": estimate.edge_count(cfg.threshold),
        "edges_truth": truth.edge_count(cfg.threshold),
        "connectivity_estimate": algebraic_connectivity(estimate, cfg.threshold),
        "connectivity_truth": algebraic_connectivity(truth, cfg.threshold),
    }
    if cfg.previous is not None:
        previous = read_edge_list(cfg.previous, n=estimate.n)
        row["relative_temporal_deviation"] = relative_temporal_deviation(estimate, previous)
    write_rows(out / "results.csv", [row])
    return cfg, _summary("EVAL", f_measure=f_score, precision=precision, recall=recall)


def _transform(args: argparse.Namespace, out: Path, workers: int) -> tuple[TransformRun, str]:
    flags = {"prices": args.prices, "mode": args.mode}
    cfg = resolve(TransformRun, flags, load_config_document(args.config))
    prices = load_prices(cfg.prices)
    signals = series_transform(prices, cfg.mode)
    write_prices(out / "prices.csv", prices)
    write_signals(out / "signals.csv", signals)
    write_stream(
        out / "stream.ndjson",
        (StreamSample(t=index, x=signals.signal(index), segment=0) for index in range(signals.p)),
    )
    return cfg, _summary("TRANSFORM", mode=cfg.mode, nodes=signals.n, signals=signals.p)


Handler = Callable[[argparse.Namespace, Path, int], tuple[Any, str]]
HANDLERS: dict[str, Handler] = {
    "synth": _synth,
    "learn-batch": _learn_batch,
    "fit-classify": _fit_classify,
    "learn-online": _learn_online,
    "track-experiment": _track,
    "eval": _eval,
    "transform": _transform,
}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = _parse_args(argv)
    load_env()
    configure_logging(bool(args.verbose))
    handler = HANDLERS[args.command]
    try:
        workers = resolve_workers(args)
        out_dir = resolve_out_dir(args, args.command)
        with staged_output(out_dir) as staging:
            cfg, summary = handler(args, staging, workers)
            write_manifest(staging, command=args.command, argv=argv, config=cfg, workers=workers)
    except HANDLED_ERRORS as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return 2
    print(summary)
    print(f"Outputs: {out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
