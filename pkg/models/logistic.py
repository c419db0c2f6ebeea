"""
Logistic regression trained by full-batch gradient descent.

Columns are standardised internally while fitting; the stored weights act on
the raw encoded point, so `w . z + b` is the decision value.
"""

from dataclasses import dataclass, field
from typing import Any, ClassVar, Dict, Optional

import numpy as np

from errors import ModelError
from models.base import BaseClassifier, as_labels, check_both_classes
from schemas import ModelConfig, ModelKind
from services.tabular import Dataset, TabularSchema
from utils.logging import get_logger

log = get_logger(__name__)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass
class LogisticModel(BaseClassifier):
    kind: ClassVar[ModelKind] = ModelKind.LOGISTIC

    schema: TabularSchema
    weights: np.ndarray
    bias: float
    meta: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.schema.dimension,):
            raise ModelError(
                f"weights have shape {self.weights.shape}, expected ({self.schema.dimension},)"
            )
        if not (np.all(np.isfinite(self.weights)) and np.isfinite(self.bias)):
            raise ModelError("logistic weights must be finite")

    @property
    def descriptor(self) -> str:
        m = self.meta
        return f"logistic(lr={m.get('learning_rate')},it={m.get('iterations')},seed={m.get('seed')})"

    def decision(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float) @ self.weights + self.bias

    def predict_batch(self, z: np.ndarray) -> np.ndarray:
        return as_labels(self.decision(z))


def train_logistic(train: Dataset, hyper: Optional[ModelConfig] = None) -> LogisticModel:
    hyper = hyper or ModelConfig()
    y = train.label_array
    if not check_both_classes(y):
        raise ModelError(f"training data for '{train.name}' holds a single class")

    z = train.encoded
    mu = z.mean(axis=0)
    sd = z.std(axis=0)
    sd[sd == 0] = 1.0
    zs = (z - mu) / sd
    target = (y + 1) / 2.0
    n = zs.shape[0]

    rng = np.random.default_rng(hyper.seed)
    w = rng.normal(scale=0.01, size=zs.shape[1])
    b = 0.0
    for _ in range(hyper.iterations):
        err = _sigmoid(zs @ w + b) - target
        w -= hyper.learning_rate * (zs.T @ err / n + hyper.l2 * w)
        b -= hyper.learning_rate * float(err.mean())

    weights = w / sd
    bias = b - float(np.sum(w * mu / sd))
    model = LogisticModel(
        schema=train.schema,
        weights=weights,
        bias=bias,
        meta={
            "learning_rate": hyper.learning_rate,
            "iterations": hyper.iterations,
            "l2": hyper.l2,
            "seed": hyper.seed,
        },
    )
    model.meta["train_accuracy"] = float(np.mean(model.predict_batch(z) == y))
    log.info(
        "logistic model trained",
        extra={"ctx": {"dataset": train.name, "rows": n, "train_accuracy": model.meta["train_accuracy"]}},
    )
    return model
