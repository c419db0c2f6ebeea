"""
Tests for models/: logistic regression, k-NN, lookup table and artifacts.
"""

import json

import numpy as np
import pytest

from errors import ModelError
from models import train_model
from models.base import CountingClassifier, accuracy, affected_set, as_labels
from models.knn import KnnModel, train_knn
from models.logistic import train_logistic
from models.lookup import LookupClassifier
from models.persistence import load_model, save_model
from schemas import ModelConfig
from services.tabular import Dataset, Instance, encode


class TestDecisionRule:
    """sign(w.z + b) with ties negative."""

    def test_tie_is_negative(self):
        """A zero decision value maps to -1."""
        assert as_labels(np.array([-0.1, 0.0, 0.1])).tolist() == [-1, -1, 1]

    def test_line_model(self, line_model, two_negatives):
        """Both toy instances are affected."""
        assert [line_model.predict(encode(x, line_model.schema)) for x in two_negatives] == [-1, -1]


class TestTraining:
    """Training the built-in models."""

    def test_logistic_separates(self, plane_train):
        """A linearly separable set is fitted almost perfectly."""
        model = train_logistic(plane_train, ModelConfig(iterations=3000, learning_rate=0.5))
        assert accuracy(model, plane_train) >= 0.95
        assert model.meta["train_accuracy"] == pytest.approx(accuracy(model, plane_train))

    def test_logistic_is_deterministic(self, plane_train):
        """Same data and seed give identical weights."""
        cfg = ModelConfig(iterations=200)
        a, b = train_logistic(plane_train, cfg), train_logistic(plane_train, cfg)
        assert np.array_equal(a.weights, b.weights) and a.bias == b.bias

    def test_single_class_rejected(self, line_schema):
        """Training needs both classes."""
        ds = Dataset(schema=line_schema, rows=(Instance((1.0, "A")), Instance((2.0, "B"))), labels=(1, 1))
        with pytest.raises(ModelError):
            train_logistic(ds)

    def test_knn_memorises(self, plane_train):
        """1-NN reproduces its training labels."""
        model = train_knn(plane_train, ModelConfig(kind="knn", k_nn=1))
        assert accuracy(model, plane_train) == 1.0

    def test_knn_needs_odd_k(self, plane_schema):
        """Even k could tie."""
        with pytest.raises(ModelError):
            KnnModel(schema=plane_schema, points=np.zeros((3, 5)), labels=[1, -1, 1], k_nn=2)

    def test_dispatch(self, plane_train):
        """train_model follows the configured kind."""
        assert isinstance(train_model(plane_train, ModelConfig(kind="knn", k_nn=3)), KnnModel)


class TestHelpers:
    """Affected set and call counting."""

    def test_affected_set(self, line_model, line_schema):
        """Rows predicted -1, in order."""
        rows = (Instance((8.0, "A")), Instance((10.0, "A")), Instance((6.0, "B")))
        ds = Dataset(schema=line_schema, rows=rows)
        assert affected_set(line_model, ds) == [rows[0], rows[2]]

    def test_counting(self, line_model):
        """Every predicted row is counted."""
        counted = CountingClassifier(line_model)
        counted.predict_batch(np.zeros((7, 3)))
        counted.predict(np.zeros(3))
        assert counted.calls == 8

    def test_lookup(self, line_schema):
        """+1 exactly on the stored points."""
        z = encode(Instance((4.0, "B")), line_schema)
        model = LookupClassifier.from_points(line_schema, [z])
        assert model.predict(z) == 1
        assert model.predict(encode(Instance((4.0, "A")), line_schema)) == -1


class TestPersistence:
    """JSON artifacts with an embedded schema."""

    def test_save_and_load(self, tmp_path, plane_train):
        """A reloaded model predicts exactly like the original."""
        model = train_logistic(plane_train, ModelConfig(iterations=200))
        path = save_model(model, tmp_path / "lr.json")
        loaded = load_model(path, expected_schema=plane_train.schema)
        assert np.array_equal(loaded.predict_batch(plane_train.encoded), model.predict_batch(plane_train.encoded))

    def test_schema_mismatch(self, tmp_path, plane_train, line_schema):
        """Loading against another schema fails."""
        path = save_model(train_logistic(plane_train, ModelConfig(iterations=50)), tmp_path / "lr.json")
        with pytest.raises(ModelError, match="digest"):
            load_model(path, expected_schema=line_schema)

    def test_tampered_artifact(self, tmp_path, plane_train):
        """Weights of the wrong length are refused."""
        path = save_model(train_logistic(plane_train, ModelConfig(iterations=50)), tmp_path / "lr.json")
        body = json.loads(path.read_text())
        body["weights"] = body["weights"][:-1]
        path.write_text(json.dumps(body))
        with pytest.raises(ModelError):
            load_model(path)

    def test_missing_file(self, tmp_path):
        """A missing artifact is a model error."""
        with pytest.raises(ModelError):
            load_model(tmp_path / "nope.json")
