from __future__ import annotations

import argparse
import json
import logging
import shutil
from collections.abc import Iterator, Mapping, Sequence
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from graphlearn import __version__
from graphlearn.experiments.config import ExperimentConfigError
from graphlearn.formats.documents import read_json, write_json
from graphlearn.utils.env import log_level_default, output_dir_default, workers_default

UTC = timezone.utc

MANIFEST_NAME = "manifest.json"
LEARN_FLAGS = (
    "alpha",
    "beta",
    "gamma",
    "d_min",
    "step",
    "tol",
    "max_iter",
    "accelerated",
    "edge_threshold",
    "normalize_distances",
)


def add_common_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", type=Path, default=None, help="Output directory ($GRAPHLEARN_OUTPUT_DIR/<cmd>).")
    parser.add_argument("--config", type=Path, default=None, help="JSON file whose keys override the flags.")
    parser.add_argument("--workers", type=int, default=None, help="Thread pool size ($GRAPHLEARN_WORKERS, else 1).")
    parser.add_argument("--verbose", action="store_true", help="Enable verbose logging.")


def add_learn_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("learning")
    group.add_argument("--alpha", type=float, default=None, help="Log-barrier weight on node degrees.")
    group.add_argument("--beta", type=float, default=None, help="Frobenius-norm weight.")
    group.add_argument("--gamma", type=float, default=None, help="Discriminative weight.")
    group.add_argument("--d-min", dest="d_min", type=float, default=None, help="Degree lower bound.")
    group.add_argument("--step", type=float, default=None, help="Fixed step size (default 2/eta).")
    group.add_argument("--tol", type=float, default=None, help="Relative iterate-change tolerance.")
    group.add_argument("--max-iter", dest="max_iter", type=int, default=None, help="Iteration cap.")
    group.add_argument("--accelerated", action=argparse.BooleanOptionalAction, default=None, help="Momentum on/off.")
    group.add_argument("--edge-threshold", dest="edge_threshold", type=float, default=None, help="Pruning level.")
    group.add_argument(
        "--normalize-distances",
        dest="normalize_distances",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="Divide each class distance vector by its signal count.",
    )
    group.add_argument("--grid", default=None, help='JSON list of config overrides, e.g. \'[{"beta": 0.05}]\'.')


def learn_flags(args: argparse.Namespace) -> dict[str, Any]:
    return {name: getattr(args, name) for name in LEARN_FLAGS if getattr(args, name, None) is not None}


def grid_flag(args: argparse.Namespace) -> list[dict[str, Any]] | None:
    raw = getattr(args, "grid", None)
    if raw is None:
        return None
    try:
        grid = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ExperimentConfigError(f"--grid is not valid JSON: {exc}") from exc
    if not isinstance(grid, list) or not all(isinstance(entry, dict) for entry in grid):
        raise ExperimentConfigError("--grid must be a JSON list of objects")
    return grid


def configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else getattr(logging, log_level_default())
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)


def load_config_document(path: Path | None) -> dict[str, Any]:
    if path is None:
        return {}
    document = read_json(path)
    if not isinstance(document, dict):
        raise ExperimentConfigError(f"{path}: the config file must hold a JSON object")
    return document


def resolve_workers(args: argparse.Namespace) -> int:
    workers = args.workers if args.workers is not None else workers_default()
    if workers < 1:
        raise ExperimentConfigError(f"--workers must be >= 1, got {workers}")
    return workers


def resolve_out_dir(args: argparse.Namespace, command: str) -> Path:
    return args.out if args.out is not None else output_dir_default() / command


@contextmanager
def staged_output(out_dir: Path) -> Iterator[Path]:
    """
    Yield a scratch directory next to `out_dir` and move it into place on success.

    On failure the scratch directory is removed, so no partial outputs remain. An existing
    `out_dir` is only replaced when it holds a manifest from an earlier run.
    """
    if out_dir.exists() and any(out_dir.iterdir()) and not (out_dir / MANIFEST_NAME).is_file():
        raise ExperimentConfigError(f"refusing to overwrite {out_dir}: it is not empty and has no {MANIFEST_NAME}")
    staging = out_dir.with_name(out_dir.name + ".partial")
    if staging.exists():
        shutil.rmtree(staging)
    staging.mkdir(parents=True)
    try:
        yield staging
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise
    if out_dir.exists():
        shutil.rmtree(out_dir)
    staging.rename(out_dir)


def write_manifest(
    out_dir: Path,
    *,
    command: str,
    argv: Sequence[str],
    config: BaseModel,
    workers: int,
    extra: Mapping[str, Any] | None = None,
) -> Path:
    payload: dict[str, Any] = {
        "command": command,
        "argv": list(argv),
        "config": config.model_dump(mode="json"),
        "seed": getattr(config, "seed", None),
        "workers": workers,
        "version": __version__,
        "created_at": datetime.now(UTC).isoformat(),
    }
    if extra:
        payload.update(extra)
    return write_json(out_dir / MANIFEST_NAME, payload)
