"""Shared fixtures: small schemas, hand-built classifiers and the bundled toy run."""

from pathlib import Path
from typing import List, Optional

import numpy as np
import pytest

from models.logistic import LogisticModel
from schemas import FeatureKind
from services.tabular import Dataset, FeatureSchema, Instance, TabularSchema

REPO_ROOT = Path(__file__).resolve().parent.parent
SAMPLES = REPO_ROOT / "data" / "samples"


def make_schema(numeric=(("f", 0.0, 10.0),), categorical=(("g", ("A", "B")),)) -> TabularSchema:
    features: List[FeatureSchema] = []
    for name, lo, hi in numeric:
        features.append(FeatureSchema(name=name, kind=FeatureKind.NUMERIC, observed_min=lo, observed_max=hi))
    for name, cats in categorical:
        features.append(FeatureSchema(name=name, kind=FeatureKind.CATEGORICAL, categories=tuple(cats)))
    return TabularSchema(features=tuple(features))


@pytest.fixture
def line_schema() -> TabularSchema:
    """f in [0, 10] (bin width 1) and g in {A, B}; encoded as (f, g=A, g=B)."""
    return make_schema()


@pytest.fixture
def line_model(line_schema) -> LogisticModel:
    """+1 iff f + 3*[g == B] > 9.5."""
    return LogisticModel(schema=line_schema, weights=np.array([1.0, 0.0, 3.0]), bias=-9.5)


@pytest.fixture
def two_negatives() -> List[Instance]:
    return [Instance((8.0, "A"), id="xA"), Instance((6.0, "B"), id="xB")]


@pytest.fixture
def plane_schema() -> TabularSchema:
    """x1, x2 in [0, 10]; c in {a, b, c}."""
    return make_schema(numeric=(("x1", 0.0, 10.0), ("x2", 0.0, 10.0)),
                       categorical=(("c", ("a", "b", "c")),))


@pytest.fixture
def plane_model(plane_schema) -> LogisticModel:
    """+1 iff x1 + x2 + 2*[c == c] > 12."""
    return LogisticModel(schema=plane_schema, weights=np.array([1.0, 1.0, 0.0, 0.0, 2.0]), bias=-12.0)


def plane_rows(rng: np.random.Generator, n: int, max_sum: Optional[float] = None) -> List[Instance]:
    rows: List[Instance] = []
    while len(rows) < n:
        x1, x2 = (float(v) for v in np.round(rng.uniform(0.0, 10.0, size=2), 3))
        if max_sum is not None and x1 + x2 >= max_sum:
            continue
        cat = ("a", "b", "c")[int(rng.integers(3))]
        if max_sum is not None and cat == "c":
            cat = "a"
        rows.append(Instance((x1, x2, cat), id=str(len(rows))))
    return rows


@pytest.fixture
def plane_train(plane_schema, plane_model) -> Dataset:
    rng = np.random.default_rng(7)
    rows = plane_rows(rng, 300)
    labels = tuple(int(v) for v in plane_model.predict_batch(
        np.array([[r.values[0], r.values[1], r.values[2] == "a", r.values[2] == "b", r.values[2] == "c"]
                  for r in rows], dtype=float)))
    return Dataset(schema=plane_schema, rows=tuple(rows), labels=labels, name="plane")


@pytest.fixture
def plane_affected(plane_schema) -> List[Instance]:
    return plane_rows(np.random.default_rng(11), 60, max_sum=9.0)


@pytest.fixture
def toy_config_path() -> Path:
    return SAMPLES / "toy_run.json"
