"""
Save/load trained models as JSON artifacts.

The artifact embeds the training schema and its digest so a reloaded model
always encodes instances exactly as it did when it was trained.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, ValidationError

from errors import ModelError
from models.base import BaseClassifier
from models.knn import KnnModel
from models.logistic import LogisticModel
from services.tabular import TabularSchema


class ModelArtifact(BaseModel):
    model_config = ConfigDict(extra="forbid")

    format_version: int = 1
    kind: Literal["logistic", "knn"]
    schema_digest: str
    feature_schema: TabularSchema
    meta: Dict[str, Any] = {}
    # logistic
    weights: Optional[List[float]] = None
    bias: Optional[float] = None
    # knn
    points: Optional[List[List[float]]] = None
    labels: Optional[List[int]] = None
    k_nn: Optional[int] = None


def to_artifact(model: BaseClassifier) -> ModelArtifact:
    common = {
        "schema_digest": model.schema.digest(),
        "feature_schema": model.schema,
        "meta": dict(getattr(model, "meta", {})),
    }
    if isinstance(model, LogisticModel):
        return ModelArtifact(kind="logistic", weights=model.weights.tolist(),
                             bias=float(model.bias), **common)
    if isinstance(model, KnnModel):
        return ModelArtifact(kind="knn", points=model.points.tolist(),
                             labels=model.labels.tolist(), k_nn=model.k_nn, **common)
    raise ModelError(f"cannot persist model of type {type(model).__name__}")


def from_artifact(artifact: ModelArtifact) -> BaseClassifier:
    schema = artifact.feature_schema
    if schema.digest() != artifact.schema_digest:
        raise ModelError("artifact schema does not match its digest")
    try:
        if artifact.kind == "logistic":
            return LogisticModel(schema=schema, weights=artifact.weights,
                                 bias=float(artifact.bias), meta=artifact.meta)
        return KnnModel(schema=schema, points=artifact.points, labels=artifact.labels,
                        k_nn=int(artifact.k_nn), meta=artifact.meta)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"incomplete {artifact.kind} artifact: {exc}") from exc


def save_model(model: BaseClassifier, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_artifact(model).model_dump_json(indent=2), encoding="utf-8")
    return path


def load_model(path: Path, expected_schema: Optional[TabularSchema] = None) -> BaseClassifier:
    path = Path(path)
    if not path.exists():
        raise ModelError(f"model artifact not found: {path}")
    try:
        artifact = ModelArtifact.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, ValidationError) as exc:
        raise ModelError(f"{path}: invalid model artifact ({exc})") from exc
    if expected_schema is not None and expected_schema.digest() != artifact.schema_digest:
        raise ModelError(
            f"{path}: schema digest {artifact.schema_digest} does not match "
            f"expected {expected_schema.digest()}"
        )
    return from_artifact(artifact)
