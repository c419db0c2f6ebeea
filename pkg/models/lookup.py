"""Table-driven classifier: +1 exactly on an explicit set of encoded points."""

from dataclasses import dataclass, field
from typing import FrozenSet, Iterable, Tuple

import numpy as np

from models.base import BaseClassifier
from services.tabular import TabularSchema

_DECIMALS = 9


def point_key(z: np.ndarray) -> Tuple[float, ...]:
    return tuple(float(v) for v in np.round(np.asarray(z, dtype=float), _DECIMALS) + 0.0)


@dataclass
class LookupClassifier(BaseClassifier):
    schema: TabularSchema
    positives: FrozenSet[Tuple[float, ...]] = field(default_factory=frozenset)

    @classmethod
    def from_points(cls, schema: TabularSchema, points: Iterable[np.ndarray]) -> "LookupClassifier":
        return cls(schema=schema, positives=frozenset(point_key(p) for p in points))

    @property
    def descriptor(self) -> str:
        return f"lookup({len(self.positives)} positives)"

    def predict_batch(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        return np.array([1 if point_key(row) in self.positives else -1 for row in z], dtype=int)
