from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from graphlearn.formats.streams import read_stream, write_stream
from graphlearn.formats.tables import FormatError
from graphlearn.synth.generators import StreamSample


def _write(tmp_path: Path, *lines: str) -> Path:
    path = tmp_path / "stream.ndjson"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_written_streams_read_back(tmp_path: Path) -> None:
    samples = [
        StreamSample(t=0, x=np.array([0.1, -0.2, 0.3]), segment=0),
        StreamSample(t=3, x=np.array([1.0, 2.0, 3.0]), segment=0, label=1),
    ]
    path = tmp_path / "stream.ndjson"
    assert write_stream(path, samples) == 2
    assert path.read_text().splitlines()[1] == '{"t": 3, "class": 1, "x": [1.0, 2.0, 3.0]}'

    records = list(read_stream(path))
    assert [(r.t, r.label) for r in records] == [(0, 0), (3, 1)]
    np.testing.assert_array_equal(records[0].signal(), samples[0].x)


def test_class_defaults_to_zero_and_blank_lines_are_skipped(tmp_path: Path) -> None:
    path = _write(tmp_path, '{"t": 0, "x": [1, 2]}', "", '{"t": 1, "class": 2, "x": [3, 4]}')
    assert [r.label for r in read_stream(path)] == [0, 2]


@pytest.mark.parametrize(
    "lines",
    [
        ('{"t": 1, "x": [1, 2]}', '{"t": 1, "x": [3, 4]}'),
        ('{"t": 0, "x": [1, 2]}', '{"t": 1, "x": [3, 4, 5]}'),
        ('{"t": 0, "x": [1, 2], "extra": true}',),
        ('{"t": -1, "x": [1, 2]}',),
        ('{"t": 0, "x": [1]}',),
        ("not json",),
    ],
)
def test_invalid_streams_are_rejected(tmp_path: Path, lines: tuple[str, ...]) -> None:
    with pytest.raises(FormatError):
        list(read_stream(_write(tmp_path, *lines)))


def test_declared_node_count_is_enforced(tmp_path: Path) -> None:
    path = _write(tmp_path, '{"t": 0, "x": [1, 2]}')
    with pytest.raises(FormatError):
        list(read_stream(path, n=3))


def test_missing_stream(tmp_path: Path) -> None:
    with pytest.raises(FormatError):
        list(read_stream(tmp_path / "missing.ndjson"))
