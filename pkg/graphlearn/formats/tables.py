"""
CSV persistence: signal matrices, edge lists, price tables and result tables.

Floats are written with `%.17g` so a rerun with the same seeds reproduces byte-identical files.
"""

from __future__ import annotations

import logging
from collections.abc import Hashable, Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from graphlearn.models.graph import EdgeVector, SignalMatrix

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
NODE_PREFIX = "node_"
EDGE_COLUMNS = ["i", "j", "weight"]


class FormatError(ValueError):
    pass


def _read_raw(path: Path) -> pd.DataFrame:
    try:
        return pd.read_csv(path, header=None, dtype=str, comment="#", skipinitialspace=True)
    except FileNotFoundError as exc:
        raise FormatError(f"file not found: {path}") from exc
    except pd.errors.EmptyDataError as exc:
        raise FormatError(f"{path} is empty") from exc
    except pd.errors.ParserError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def _parse_cell(cell: Any) -> float:
    try:
        return float(str(cell).strip())
    except ValueError:
        return float("nan")


def _numeric(frame: pd.DataFrame, path: Path) -> np.ndarray:
    # float() rounds correctly, so `%.17g` cells read back bit-for-bit.
    values = np.vectorize(_parse_cell, otypes=[float])(frame.to_numpy(dtype=object))
    bad = np.isnan(values).any(axis=1)
    if bad.any():
        row = int(np.flatnonzero(bad)[0])
        raise FormatError(f"{path}: non-numeric or missing value in data row {row + 1}")
    return values


def _split_header(raw: pd.DataFrame) -> tuple[list[str] | None, pd.DataFrame]:
    first = pd.to_numeric(raw.iloc[0], errors="coerce")
    if first.isna().any():
        return [str(cell).strip() for cell in raw.iloc[0]], raw.iloc[1:]
    return None, raw


def read_signals(path: Path | str) -> SignalMatrix:
    """One signal per row; an optional `node_0,...,node_{N-1}` header row is skipped."""
    path = Path(path)
    header, body = _split_header(_read_raw(path))
    if header is not None and not all(name.startswith(NODE_PREFIX) for name in header):
        raise FormatError(f"{path}: header must name columns {NODE_PREFIX}0..{NODE_PREFIX}<N-1>")
    if body.empty:
        raise FormatError(f"{path} has no signal rows")
    values = _numeric(body, path)
    if values.shape[1] < 2:
        raise FormatError(f"{path}: signals need at least 2 nodes, got {values.shape[1]}")
    return SignalMatrix(data=values.T)


def write_signals(path: Path | str, signals: SignalMatrix) -> Path:
    path = Path(path)
    frame = pd.DataFrame(signals.data.T, columns=[f"{NODE_PREFIX}{i}" for i in range(signals.n)])
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def read_edge_list(path: Path | str, n: int | None = None) -> EdgeVector:
    """
    Read `i,j,weight` rows. The node count comes from `n`, a leading `# n=<N>` line, or
    the largest node index plus one, in that order.
    """
    path = Path(path)
    declared = None
    try:
        with path.open(encoding="utf-8") as handle:
            first = handle.readline().strip()
    except FileNotFoundError as exc:
        raise FormatError(f"file not found: {path}") from exc
    if first.startswith("#") and "n=" in first:
        try:
            declared = int(first.split("n=", 1)[1].split()[0])
        except ValueError as exc:
            raise FormatError(f"{path}: bad node-count line {first!r}") from exc

    try:
        frame = pd.read_csv(path, comment="#", skipinitialspace=True, float_precision="round_trip")
    except pd.errors.EmptyDataError:
        frame = pd.DataFrame(columns=EDGE_COLUMNS)
    if list(frame.columns) != EDGE_COLUMNS:
        raise FormatError(f"{path}: expected columns {EDGE_COLUMNS}, got {list(frame.columns)}")
    values = _numeric(frame, path) if len(frame) else np.zeros((0, 3))

    size = n if n is not None else declared
    if size is None:
        if not len(values):
            raise FormatError(f"{path}: cannot infer the node count of an empty edge list")
        size = int(values[:, :2].max()) + 1
    edges = []
    for i, j, weight in values:
        a, b = int(i), int(j)
        if a != i or b != j:
            raise FormatError(f"{path}: node indices must be integers, got ({i}, {j})")
        if a > b:
            a, b = b, a
        if a == b or not 0 <= a < b < size:
            raise FormatError(f"{path}: invalid pair ({int(i)}, {int(j)}) for n={size}")
        edges.append((a, b, float(weight)))
    try:
        return EdgeVector.from_edges(size, edges)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def write_edge_list(path: Path | str, w: EdgeVector, threshold: float = 0.0) -> Path:
    path = Path(path)
    frame = pd.DataFrame(w.edges(threshold), columns=EDGE_COLUMNS)
    with path.open("w", encoding="utf-8", newline="") as handle:
        handle.write(f"# n={w.n}\n")
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT)
    return path


def load_prices(path: Path | str) -> pd.DataFrame:
    """Price table with a `date` column followed by `node_0..node_{N-1}`; rows sorted by date."""
    path = Path(path)
    try:
        frame = pd.read_csv(path, skipinitialspace=True, float_precision="round_trip")
    except FileNotFoundError as exc:
        raise FormatError(f"file not found: {path}") from exc
    except pd.errors.EmptyDataError as exc:
        raise FormatError(f"{path} is empty") from exc
    if not len(frame.columns) or frame.columns[0] != "date":
        raise FormatError(f"{path}: the first column must be `date`")
    nodes = list(frame.columns[1:])
    if not nodes or not all(str(column).startswith(NODE_PREFIX) for column in nodes):
        raise FormatError(f"{path}: price columns must be named {NODE_PREFIX}0..{NODE_PREFIX}<N-1>")
    prices = frame.set_index("date").sort_index()
    return pd.DataFrame(_numeric(prices, path), index=prices.index, columns=prices.columns)


def write_prices(path: Path | str, prices: pd.DataFrame) -> Path:
    path = Path(path)
    prices.to_csv(path, index=True, index_label="date", float_format=FLOAT_FORMAT)
    return path


def write_rows(path: Path | str, rows: Sequence[Mapping[str, Any]], columns: Sequence[str] | None = None) -> Path:
    """Results table; `columns` fixes the column order (and the header of an empty table)."""
    path = Path(path)
    frame = pd.DataFrame(list(rows), columns=list(columns) if columns is not None else None)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.debug("wrote %s rows to %s", len(frame), path)
    return path


def classification_rows(
    predictions: Iterable[tuple[Hashable, Mapping[Hashable, float]]],
    classes: Sequence[Hashable],
) -> list[dict[str, Any]]:
    """Rows `signal_id, predicted, energy_<class>...` for the classification output table."""
    rows = []
    for signal_id, (label, energies) in enumerate(predictions):
        row: dict[str, Any] = {"signal_id": signal_id, "predicted": label}
        row.update({f"energy_{cls}": energies[cls] for cls in classes})
        rows.append(row)
    return rows
