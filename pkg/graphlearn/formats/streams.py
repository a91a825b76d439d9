"""
NDJSON streams: one `{"t": int, "class": int, "x": [N reals]}` object per line.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Iterator
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from graphlearn.formats.tables import FormatError
from graphlearn.synth.generators import StreamSample


class StreamRecord(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    t: int = Field(..., ge=0)
    label: int = Field(0, alias="class")
    x: list[float] = Field(..., min_length=2)

    def signal(self) -> np.ndarray:
        return np.asarray(self.x, dtype=float)


def read_stream(path: Path | str, *, n: int | None = None) -> Iterator[StreamRecord]:
    """
    Yield records in file order. Blank lines are skipped; times must strictly increase and every
    record must carry the same number of node values (`n` when given).
    """
    path = Path(path)
    try:
        handle = path.open(encoding="utf-8")
    except FileNotFoundError as exc:
        raise FormatError(f"file not found: {path}") from exc
    with handle:
        last_t = -1
        size = n
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = StreamRecord.model_validate_json(line)
            except ValidationError as exc:
                raise FormatError(f"{path}:{line_no}: {exc.errors()[0]['msg']}") from exc
            if record.t <= last_t:
                raise FormatError(f"{path}:{line_no}: time {record.t} does not follow {last_t}")
            if size is None:
                size = len(record.x)
            elif len(record.x) != size:
                raise FormatError(f"{path}:{line_no}: expected {size} node values, got {len(record.x)}")
            last_t = record.t
            yield record


def write_stream(path: Path | str, samples: Iterable[StreamSample]) -> int:
    """Write samples as NDJSON and return how many were written."""
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8") as handle:
        for sample in samples:
            payload = {"t": sample.t, "class": sample.label, "x": [float(value) for value in sample.x]}
            handle.write(json.dumps(payload) + "\n")
            count += 1
    return count
