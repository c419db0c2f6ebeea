"""k-nearest-neighbour majority vote in the encoded L1 geometry."""

from dataclasses import dataclass, field
from typing import Any, ClassVar, Dict, Optional

import numpy as np

from errors import ModelError
from models.base import BaseClassifier, check_both_classes
from schemas import ModelConfig, ModelKind
from services.tabular import Dataset, TabularSchema
from utils.logging import get_logger

log = get_logger(__name__)

# Upper bound on the size of one (queries x stored points) distance block.
_BLOCK_CELLS = 4_000_000


@dataclass
class KnnModel(BaseClassifier):
    kind: ClassVar[ModelKind] = ModelKind.KNN

    schema: TabularSchema
    points: np.ndarray
    labels: np.ndarray
    k_nn: int = 5
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.k_nn % 2 == 0:
            raise ModelError("k_nn must be odd")
        if self.points.shape[0] != self.labels.shape[0]:
            raise ModelError("points and labels differ in length")
        if self.k_nn > self.points.shape[0]:
            raise ModelError(f"k_nn={self.k_nn} exceeds {self.points.shape[0]} stored points")

    @property
    def descriptor(self) -> str:
        return f"knn(k={self.k_nn})"

    def distances(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        out = np.zeros((z.shape[0], self.points.shape[0]), dtype=float)
        for j in range(z.shape[1]):
            out += np.abs(z[:, j, None] - self.points[None, :, j])
        return out

    def predict_batch(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        step = max(1, _BLOCK_CELLS // max(1, self.points.shape[0]))
        out = np.empty(z.shape[0], dtype=int)
        for start in range(0, z.shape[0], step):
            dist = self.distances(z[start:start + step])
            # Stable sort: earlier stored points win distance ties.
            nearest = np.argsort(dist, axis=1, kind="stable")[:, : self.k_nn]
            votes = self.labels[nearest].sum(axis=1)
            out[start:start + step] = np.where(votes > 0, 1, -1)
        return out


def train_knn(train: Dataset, hyper: Optional[ModelConfig] = None) -> KnnModel:
    hyper = hyper or ModelConfig(kind="knn")
    y = train.label_array
    if not check_both_classes(y):
        raise ModelError(f"training data for '{train.name}' holds a single class")
    model = KnnModel(schema=train.schema, points=train.encoded.copy(), labels=y.copy(),
                     k_nn=hyper.k_nn)
    model.meta["train_accuracy"] = float(np.mean(model.predict_batch(train.encoded) == y))
    log.info(
        "knn model fitted",
        extra={"ctx": {"dataset": train.name, "rows": len(train), "k_nn": hyper.k_nn,
                       "train_accuracy": model.meta["train_accuracy"]}},
    )
    return model
