from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pytest

from graphlearn.classification.filter_bank import classify, model_from_graphs
from graphlearn.formats.documents import load_model, read_json, save_model, write_json
from graphlearn.formats.tables import FormatError
from graphlearn.models.graph import EdgeVector


def _model():
    path = EdgeVector.from_edges(5, [(i, i + 1, 0.5 + i) for i in range(4)])
    ring = EdgeVector.from_edges(5, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (0, 4, 1.0)])
    return model_from_graphs({0: path, 1: ring}, 2)


def test_saved_models_classify_identically(tmp_path: Path) -> None:
    model = _model()
    loaded = load_model(save_model(tmp_path / "model.json", model))
    assert loaded.classes == (0, 1)
    assert loaded.bandwidth == 2
    for original, restored in zip(model.bases, loaded.bases, strict=True):
        np.testing.assert_array_equal(restored.eigenvalues, original.eigenvalues)
        np.testing.assert_array_equal(restored.eigenvectors, original.eigenvectors)
    np.testing.assert_array_equal(loaded.graph(1).w, model.graph(1).w)

    x = np.random.default_rng(2).normal(size=5)
    assert classify(loaded, x).label == classify(model, x).label


def test_model_bases_must_follow_class_order(tmp_path: Path) -> None:
    path = save_model(tmp_path / "model.json", _model())
    document = json.loads(path.read_text())
    document["classes"] = [1, 0]
    path.write_text(json.dumps(document))
    with pytest.raises(FormatError):
        load_model(path)


def test_invalid_model_documents(tmp_path: Path) -> None:
    path = tmp_path / "model.json"
    path.write_text('{"n": 5}')
    with pytest.raises(FormatError):
        load_model(path)
    with pytest.raises(FormatError):
        load_model(tmp_path / "missing.json")


def test_json_helpers(tmp_path: Path) -> None:
    path = write_json(tmp_path / "doc.json", {"b": 1, "a": [1.5, None]})
    assert path.read_text().startswith('{\n  "a"')
    assert read_json(path) == {"a": [1.5, None], "b": 1}
    path.write_text("{broken")
    with pytest.raises(FormatError):
        read_json(path)


def test_non_finite_floats_are_written_as_null(tmp_path: Path) -> None:
    payload = {"objective": float("inf"), "history": [1.0, np.float64("nan")], "pair": (np.float64("-inf"), 2)}
    path = write_json(tmp_path / "doc.json", payload)
    assert "Infinity" not in path.read_text() and "NaN" not in path.read_text()
    assert read_json(path) == {"history": [1.0, None], "objective": None, "pair": [None, 2]}
