"""
Black-box classifier contract.

Everything downstream (candidate generation, GLANCE, metrics) talks to models
only through `predict_batch` on encoded points, so any model honouring this
interface can be explained.
"""

from abc import ABC, abstractmethod
from typing import ClassVar, List, Optional, Sequence

import numpy as np

from schemas import ModelKind
from services.tabular import Dataset, Instance, TabularBatch, TabularSchema, encode, encode_batch


class BaseClassifier(ABC):
    """h: encoded point -> {-1, +1}. Implementations must be deterministic."""

    schema: TabularSchema
    kind: ClassVar[Optional[ModelKind]] = None

    @property
    @abstractmethod
    def descriptor(self) -> str:
        ...

    @abstractmethod
    def predict_batch(self, z: np.ndarray) -> np.ndarray:
        """Labels in {-1, +1} for each row of a 2-D encoded array."""

    def predict(self, z: np.ndarray) -> int:
        return int(self.predict_batch(np.asarray(z, dtype=float).reshape(1, -1))[0])

    def predict_rows(self, batch: TabularBatch) -> np.ndarray:
        if len(batch) == 0:
            return np.zeros(0, dtype=int)
        return self.predict_batch(encode_batch(batch, self.schema))


class CountingClassifier(BaseClassifier):
    """Wraps a classifier and counts how many points it has been asked about."""

    def __init__(self, inner: BaseClassifier):
        self.inner = inner
        self.schema = inner.schema
        self.calls = 0

    @property
    def descriptor(self) -> str:
        return self.inner.descriptor

    def predict_batch(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        self.calls += int(z.shape[0])
        return self.inner.predict_batch(z)


def predict(model: BaseClassifier, x: Instance) -> int:
    return model.predict(encode(x, model.schema))


def affected_set(model: BaseClassifier, data: Dataset) -> List[Instance]:
    """Rows predicted -1, in dataset order."""
    labels = model.predict_rows(data.batch)
    return [x for x, y in zip(data.rows, labels) if y == -1]


def accuracy(model: BaseClassifier, data: Dataset) -> float:
    labels = model.predict_rows(data.batch)
    return float(np.mean(labels == data.label_array))


def as_labels(decision: np.ndarray) -> np.ndarray:
    """Strictly positive decision values map to +1; zero stays negative."""
    return np.where(np.asarray(decision) > 0, 1, -1)


def check_both_classes(labels: Sequence[int]) -> bool:
    values = set(int(v) for v in labels)
    return values == {-1, 1}
