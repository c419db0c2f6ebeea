"""
Tests for services/tabular.py: ingestion, encoding, k-fold splits.
"""

from pathlib import Path

import numpy as np
import pytest

from errors import DataError, SchemaError
from schemas import SchemaConfig
from services.tabular import (
    Instance,
    encode,
    encode_batch,
    ingest_csv,
    split_kfold,
    to_batch,
    validate_instance,
)


def _schema_config(**overrides) -> SchemaConfig:
    body = {
        "features": [
            {"name": "income", "kind": "numeric"},
            {"name": "age", "kind": "numeric"},
            {"name": "housing", "kind": "categorical"},
        ],
        "label": {"column": "class", "positive": "good", "negative": "bad"},
    }
    body.update(overrides)
    return SchemaConfig.model_validate(body)


def _write(tmp_path: Path, text: str) -> Path:
    path = tmp_path / "data.csv"
    path.write_text(text, encoding="utf-8")
    return path


GOOD_CSV = (
    "income,age,housing,class\n"
    "20,30,rent,bad\n"
    "80,40,own,good\n"
    "50,20,own,good\n"
    "30,60,free,bad\n"
)


class TestIngest:
    """CSV ingestion into a labelled Dataset."""

    def test_basic_ingest(self, tmp_path):
        """Rows, labels, ranges and inferred categories come from the file."""
        ds = ingest_csv(_write(tmp_path, GOOD_CSV), _schema_config(), name="toy")
        assert len(ds) == 4
        assert ds.labels == (-1, 1, 1, -1)
        income = ds.schema.feature("income")
        assert (income.observed_min, income.observed_max) == (20.0, 80.0)
        assert income.bin_width == pytest.approx(6.0)
        assert ds.schema.feature("housing").categories == ("free", "own", "rent")
        assert ds.rows[1].values == (80.0, 40.0, "own")
        assert ds.rows[1].id == "1"
        assert ds.fingerprint()["rows"] == 4

    def test_missing_values_are_dropped_and_counted(self, tmp_path):
        """A row with a missing token is dropped, not guessed."""
        text = GOOD_CSV + "?,35,own,bad\n"
        ds = ingest_csv(_write(tmp_path, text), _schema_config())
        assert len(ds) == 4
        assert ds.dropped_rows == 1

    def test_median_imputation(self, tmp_path):
        """With impute_median, a numeric gap takes the column median."""
        text = GOOD_CSV + "?,35,own,bad\n"
        ds = ingest_csv(_write(tmp_path, text), _schema_config(impute_median=True))
        assert len(ds) == 5
        assert ds.rows[-1].values[0] == 40.0

    def test_unknown_category_rejected(self, tmp_path):
        """Declared categories reject unseen labels by default, naming the line."""
        cfg = _schema_config(features=[
            {"name": "income", "kind": "numeric"},
            {"name": "age", "kind": "numeric"},
            {"name": "housing", "kind": "categorical", "categories": ["own", "rent"]},
        ])
        with pytest.raises(DataError) as exc:
            ingest_csv(_write(tmp_path, GOOD_CSV), cfg)
        assert exc.value.row_number == 5

    def test_unknown_category_added(self, tmp_path):
        """With unknown_category=add, new labels extend the declared list."""
        cfg = _schema_config(
            features=[
                {"name": "income", "kind": "numeric"},
                {"name": "age", "kind": "numeric"},
                {"name": "housing", "kind": "categorical", "categories": ["own", "rent"]},
            ],
            unknown_category="add",
        )
        ds = ingest_csv(_write(tmp_path, GOOD_CSV), cfg)
        assert ds.schema.feature("housing").categories == ("own", "rent", "free")

    def test_header_mismatch(self, tmp_path):
        """Missing or unexpected columns are a schema error."""
        text = GOOD_CSV.replace("housing", "home")
        with pytest.raises(SchemaError):
            ingest_csv(_write(tmp_path, text), _schema_config())

    def test_ignored_columns_are_allowed(self, tmp_path):
        """Columns listed in ignore_columns are skipped silently."""
        text = "\n".join(line + ",x" for line in GOOD_CSV.strip().split("\n"))
        text = text.replace("class,x", "class,note", 1) + "\n"
        ds = ingest_csv(_write(tmp_path, text), _schema_config(ignore_columns=["note"]))
        assert len(ds) == 4

    def test_non_binary_label(self, tmp_path):
        """A third label value is rejected."""
        text = GOOD_CSV + "40,33,own,maybe\n"
        with pytest.raises(DataError, match="non-binary label"):
            ingest_csv(_write(tmp_path, text), _schema_config())

    def test_single_label_value(self, tmp_path):
        """Both label values must be present."""
        text = "income,age,housing,class\n20,30,rent,good\n80,40,own,good\n"
        with pytest.raises(DataError, match="non-binary label"):
            ingest_csv(_write(tmp_path, text), _schema_config())

    @pytest.mark.parametrize("short_row", ["40,33,own", "40,33"])
    def test_short_row_is_malformed(self, tmp_path, short_row):
        """A row with too few fields is an error naming its line, not a dropped gap."""
        text = GOOD_CSV + short_row + "\n"
        with pytest.raises(DataError, match="malformed row") as exc:
            ingest_csv(_write(tmp_path, text), _schema_config())
        assert exc.value.row_number == 6

    def test_short_row_mid_file(self, tmp_path):
        text = GOOD_CSV.replace("80,40,own,good", "80,40,own")
        with pytest.raises(DataError) as exc:
            ingest_csv(_write(tmp_path, text), _schema_config())
        assert exc.value.row_number == 3

    def test_non_numeric_value(self, tmp_path):
        """A non-number in a numeric column names its line."""
        text = GOOD_CSV.replace("80,40", "80,old")
        with pytest.raises(DataError) as exc:
            ingest_csv(_write(tmp_path, text), _schema_config())
        assert exc.value.row_number == 3

    def test_constant_numeric(self, tmp_path):
        """A numeric feature with zero range has no bin width."""
        text = "income,age,housing,class\n20,40,rent,bad\n80,40,own,good\n50,40,own,good\n"
        with pytest.raises(SchemaError, match="constant"):
            ingest_csv(_write(tmp_path, text), _schema_config())


class TestEncoding:
    """Decile encoding of numerics, one-hot of categoricals."""

    def test_encode(self, line_schema):
        """f is divided by its bin width; g is one-hot."""
        assert encode(Instance((8.0, "A")), line_schema).tolist() == [8.0, 1.0, 0.0]
        assert encode(Instance((6.0, "B")), line_schema).tolist() == [6.0, 0.0, 1.0]

    def test_batch_matches_single(self, plane_schema):
        """Batch encoding equals row-by-row encoding."""
        rows = [Instance((1.0, 2.0, "a")), Instance((3.5, 9.0, "c"))]
        z = encode_batch(to_batch(rows, plane_schema), plane_schema)
        for row, x in zip(z, rows):
            assert np.array_equal(row, encode(x, plane_schema))

    def test_validate_instance(self, line_schema):
        """Wrong arity, non-finite numbers and unknown labels are rejected."""
        with pytest.raises(DataError):
            validate_instance(Instance((1.0,)), line_schema)
        with pytest.raises(DataError):
            validate_instance(Instance((float("nan"), "A")), line_schema)
        with pytest.raises(DataError):
            validate_instance(Instance((1.0, "C")), line_schema)

    def test_unknown_feature(self, line_schema):
        """Looking up a missing feature is a schema error."""
        with pytest.raises(SchemaError):
            line_schema.feature("nope")


class TestSplit:
    """Deterministic shuffled k-fold."""

    def test_partition(self, tmp_path):
        """Test folds partition the rows; train is the complement."""
        ds = ingest_csv(Path(__file__).resolve().parent.parent / "data" / "samples" / "toy_credit.csv",
                        _schema_config())
        splits = split_kfold(ds, 5, seed=13)
        test_ids = [x.id for _, test in splits for x in test.rows]
        assert sorted(test_ids, key=int) == [x.id for x in ds.rows]
        for train, test in splits:
            assert not {x.id for x in train.rows} & {x.id for x in test.rows}
            assert len(train) + len(test) == len(ds)

    def test_deterministic(self, tmp_path):
        """Same seed, same folds."""
        ds = ingest_csv(_write(tmp_path, GOOD_CSV), _schema_config())
        a = [[x.id for x in test.rows] for _, test in split_kfold(ds, 2, seed=5)]
        b = [[x.id for x in test.rows] for _, test in split_kfold(ds, 2, seed=5)]
        assert a == b

    def test_too_many_folds(self, tmp_path):
        """More folds than rows is an error."""
        ds = ingest_csv(_write(tmp_path, GOOD_CSV), _schema_config())
        with pytest.raises(DataError):
            split_kfold(ds, 5, seed=1)
