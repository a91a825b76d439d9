"""
JSON documents: classifier models, run manifests and small diagnostics files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from graphlearn.classification.filter_bank import ClassifierModel
from graphlearn.formats.tables import FormatError
from graphlearn.models.graph import EdgeVector, GftBasis


class ClassBasisDocument(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    label: int | str
    eigenvalues: list[float]
    eigenvectors: list[list[float]]
    edges: list[tuple[int, int, float]]


class ClassifierDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int
    classes: list[int | str]
    bandwidth: int
    normalized: bool = False
    bases: list[ClassBasisDocument]


def model_document(model: ClassifierModel) -> ClassifierDocument:
    bases = [
        ClassBasisDocument(
            label=label,
            eigenvalues=basis.eigenvalues.tolist(),
            eigenvectors=basis.eigenvectors.tolist(),
            edges=graph.edges(),
        )
        for label, basis, graph in zip(model.classes, model.bases, model.graphs, strict=True)
    ]
    return ClassifierDocument(
        n=model.n,
        classes=list(model.classes),
        bandwidth=model.bandwidth,
        normalized=model.normalized,
        bases=bases,
    )


def save_model(path: Path | str, model: ClassifierModel) -> Path:
    return write_json(path, model_document(model).model_dump(mode="json"))


def load_model(path: Path | str) -> ClassifierModel:
    """Rebuild a classifier from stored bases; nothing is re-decomposed."""
    path = Path(path)
    try:
        document = ClassifierDocument.model_validate_json(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise FormatError(f"file not found: {path}") from exc
    except ValidationError as exc:
        raise FormatError(f"{path}: invalid classifier model: {exc.errors()[0]['msg']}") from exc
    if [entry.label for entry in document.bases] != document.classes:
        raise FormatError(f"{path}: bases must be listed in class order")
    try:
        return ClassifierModel(
            classes=tuple(document.classes),
            bases=tuple(GftBasis(eigenvalues=e.eigenvalues, eigenvectors=e.eigenvectors) for e in document.bases),
            graphs=tuple(EdgeVector.from_edges(document.n, e.edges) for e in document.bases),
            bandwidth=document.bandwidth,
            normalized=document.normalized,
        )
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc


def _finite_or_null(value: Any) -> Any:
    if isinstance(value, dict):
        return {key: _finite_or_null(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_finite_or_null(item) for item in value]
    if isinstance(value, (float, np.floating)) and not math.isfinite(value):
        return None
    return value


def write_json(path: Path | str, payload: Any) -> Path:
    """Non-finite floats are written as null."""
    path = Path(path)
    text = json.dumps(_finite_or_null(payload), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def read_json(path: Path | str) -> Any:
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise FormatError(f"file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from exc
