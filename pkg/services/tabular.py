"""
Tabular data: feature schema, ingestion, encoding and k-fold splitting.

Numeric features are measured in "bins": the observed training range is split
into 10 equal-width bins and every numeric coordinate is divided by the bin
width, so one unit of encoded distance is one decile of the feature's range.
Categorical features are one-hot expanded. The encoded space is shared by the
clustering step, the merge distances and the built-in classifiers.
"""

import csv
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, model_validator

from errors import DataError, SchemaError
from schemas import FeatureKind, SchemaConfig
from utils.logging import get_logger

log = get_logger(__name__)

N_BINS = 10
MISSING_TOKENS = frozenset({"", "?", "NA", "N/A", "NaN", "nan", "null", "None"})


# -------------------------- Schema --------------------------


class FeatureSchema(BaseModel):
    """One feature with the constants that define its cost geometry."""

    model_config = ConfigDict(frozen=True)

    name: str
    kind: FeatureKind
    observed_min: Optional[float] = None
    observed_max: Optional[float] = None
    categories: Tuple[str, ...] = ()

    @model_validator(mode="after")
    def _check(self) -> "FeatureSchema":
        if self.kind == FeatureKind.NUMERIC:
            lo, hi = self.observed_min, self.observed_max
            if lo is None or hi is None or not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError(f"numeric feature '{self.name}' needs a finite observed range")
            if hi <= lo:
                raise ValueError(f"numeric feature '{self.name}' is constant")
        else:
            if not self.categories:
                raise ValueError(f"categorical feature '{self.name}' has no categories")
            if len(set(self.categories)) != len(self.categories):
                raise ValueError(f"duplicate category labels in '{self.name}'")
        return self

    @property
    def is_numeric(self) -> bool:
        return self.kind == FeatureKind.NUMERIC

    @property
    def bin_width(self) -> float:
        if not self.is_numeric:
            raise SchemaError(f"'{self.name}' is categorical and has no bin width")
        return (self.observed_max - self.observed_min) / N_BINS

    @property
    def width(self) -> int:
        """Number of encoded coordinates."""
        return 1 if self.is_numeric else len(self.categories)


class TabularSchema(BaseModel):
    """Ordered feature schemas plus the index bookkeeping derived from them."""

    model_config = ConfigDict(frozen=True)

    features: Tuple[FeatureSchema, ...]

    @model_validator(mode="after")
    def _unique(self) -> "TabularSchema":
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        return self

    def __len__(self) -> int:
        return len(self.features)

    @cached_property
    def names(self) -> Tuple[str, ...]:
        return tuple(f.name for f in self.features)

    @cached_property
    def positions(self) -> Dict[str, int]:
        return {f.name: i for i, f in enumerate(self.features)}

    @cached_property
    def numeric_positions(self) -> Tuple[int, ...]:
        return tuple(i for i, f in enumerate(self.features) if f.is_numeric)

    @cached_property
    def categorical_positions(self) -> Tuple[int, ...]:
        return tuple(i for i, f in enumerate(self.features) if not f.is_numeric)

    @cached_property
    def column_of(self) -> Dict[str, int]:
        """Feature name -> column in the numeric or categorical block of a batch."""
        cols: Dict[str, int] = {}
        for j, i in enumerate(self.numeric_positions):
            cols[self.features[i].name] = j
        for j, i in enumerate(self.categorical_positions):
            cols[self.features[i].name] = j
        return cols

    @cached_property
    def offsets(self) -> Tuple[int, ...]:
        out, cur = [], 0
        for f in self.features:
            out.append(cur)
            cur += f.width
        return tuple(out)

    @cached_property
    def dimension(self) -> int:
        return sum(f.width for f in self.features)

    @cached_property
    def bin_widths(self) -> np.ndarray:
        return np.array([self.features[i].bin_width for i in self.numeric_positions], dtype=float)

    @cached_property
    def category_index(self) -> Dict[str, Dict[str, int]]:
        return {
            f.name: {label: c for c, label in enumerate(f.categories)}
            for f in self.features
            if not f.is_numeric
        }

    def feature(self, name: str) -> FeatureSchema:
        try:
            return self.features[self.positions[name]]
        except KeyError:
            raise SchemaError(f"unknown feature '{name}'") from None

    def digest(self) -> str:
        payload = json.dumps(self.model_dump(mode="json"), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def with_ranges(self, mins: Sequence[float], maxs: Sequence[float]) -> "TabularSchema":
        """Copy with new observed ranges for the numeric features (schema order)."""
        feats = list(self.features)
        for j, i in enumerate(self.numeric_positions):
            lo, hi = float(mins[j]), float(maxs[j])
            if not hi > lo:
                raise SchemaError(f"constant numeric feature '{feats[i].name}'")
            feats[i] = feats[i].model_copy(update={"observed_min": lo, "observed_max": hi})
        return TabularSchema(features=tuple(feats))


# -------------------------- Instances and batches --------------------------


@dataclass(frozen=True)
class Instance:
    """One individual: raw numeric values and category labels, in schema order."""

    values: Tuple[Any, ...]
    id: Optional[str] = None

    def __len__(self) -> int:
        return len(self.values)


@dataclass
class TabularBatch:
    """
    Columnar view of many instances.

    numeric: (n, #numeric) raw values; categorical: (n, #categorical) category
    codes. Both blocks follow schema order within their kind.
    """

    numeric: np.ndarray
    categorical: np.ndarray

    def __len__(self) -> int:
        return int(self.numeric.shape[0])

    def copy(self) -> "TabularBatch":
        return TabularBatch(self.numeric.copy(), self.categorical.copy())

    def take(self, indices: Sequence[int]) -> "TabularBatch":
        idx = np.asarray(indices, dtype=int)
        return TabularBatch(self.numeric[idx], self.categorical[idx])

    def repeat(self, times: int) -> "TabularBatch":
        return TabularBatch(
            np.tile(self.numeric, (times, 1)), np.tile(self.categorical, (times, 1))
        )


def validate_instance(x: Instance, schema: TabularSchema) -> None:
    if len(x.values) != len(schema):
        raise DataError(f"instance has {len(x.values)} values, schema has {len(schema)}")
    for value, feat in zip(x.values, schema.features):
        if feat.is_numeric:
            if isinstance(value, (bool, str)) or not math.isfinite(float(value)):
                raise DataError(f"feature '{feat.name}': {value!r} is not a finite number")
        elif value not in schema.category_index[feat.name]:
            raise DataError(f"feature '{feat.name}': unknown category {value!r}")


def to_batch(rows: Sequence[Instance], schema: TabularSchema) -> TabularBatch:
    n = len(rows)
    num = np.empty((n, len(schema.numeric_positions)), dtype=float)
    cat = np.empty((n, len(schema.categorical_positions)), dtype=np.int64)
    for j, i in enumerate(schema.numeric_positions):
        num[:, j] = [float(r.values[i]) for r in rows]
    for j, i in enumerate(schema.categorical_positions):
        lookup = schema.category_index[schema.features[i].name]
        cat[:, j] = [lookup[r.values[i]] for r in rows]
    return TabularBatch(num, cat)


def from_batch(
    batch: TabularBatch, schema: TabularSchema, ids: Optional[Sequence[Optional[str]]] = None
) -> List[Instance]:
    out: List[Instance] = []
    for r in range(len(batch)):
        values: List[Any] = [None] * len(schema)
        for j, i in enumerate(schema.numeric_positions):
            values[i] = float(batch.numeric[r, j])
        for j, i in enumerate(schema.categorical_positions):
            values[i] = schema.features[i].categories[int(batch.categorical[r, j])]
        out.append(Instance(tuple(values), ids[r] if ids is not None else None))
    return out


# -------------------------- Encoding --------------------------


def encode_batch(batch: TabularBatch, schema: TabularSchema) -> np.ndarray:
    """Numerics divided by bin width, categoricals one-hot; one row per instance."""
    n = len(batch)
    z = np.zeros((n, schema.dimension), dtype=float)
    for j, i in enumerate(schema.numeric_positions):
        z[:, schema.offsets[i]] = batch.numeric[:, j] / schema.bin_widths[j]
    rows = np.arange(n)
    for j, i in enumerate(schema.categorical_positions):
        z[rows, schema.offsets[i] + batch.categorical[:, j]] = 1.0
    return z


def encode(instance: Instance, schema: TabularSchema) -> np.ndarray:
    """Encode one instance into the shared dense geometry."""
    validate_instance(instance, schema)
    return encode_batch(to_batch([instance], schema), schema)[0]


# -------------------------- Dataset --------------------------


@dataclass(frozen=True)
class Dataset:
    """Rows conforming to a schema, with optional labels in {-1, +1}."""

    schema: TabularSchema
    rows: Tuple[Instance, ...]
    labels: Optional[Tuple[int, ...]] = None
    name: str = "dataset"
    dropped_rows: int = 0
    _validated: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.rows) < 1:
            raise DataError("a dataset needs at least one row")
        if self.labels is not None:
            if len(self.labels) != len(self.rows):
                raise DataError("labels and rows differ in length")
            if any(y not in (-1, 1) for y in self.labels):
                raise DataError("labels must be -1 or +1")
        if not self._validated:
            for r, x in enumerate(self.rows):
                try:
                    validate_instance(x, self.schema)
                except DataError as exc:
                    raise DataError(str(exc), row_number=r) from None

    def __len__(self) -> int:
        return len(self.rows)

    @cached_property
    def batch(self) -> TabularBatch:
        return to_batch(self.rows, self.schema)

    @cached_property
    def encoded(self) -> np.ndarray:
        return encode_batch(self.batch, self.schema)

    @cached_property
    def label_array(self) -> np.ndarray:
        if self.labels is None:
            raise DataError(f"dataset '{self.name}' has no labels")
        return np.asarray(self.labels, dtype=int)

    def subset(self, indices: Sequence[int], *, schema: Optional[TabularSchema] = None,
               name: Optional[str] = None) -> "Dataset":
        idx = list(indices)
        return Dataset(
            schema=schema or self.schema,
            rows=tuple(self.rows[i] for i in idx),
            labels=tuple(self.labels[i] for i in idx) if self.labels is not None else None,
            name=name or self.name,
            _validated=True,
        )

    def fingerprint(self) -> Dict[str, Any]:
        return {"name": self.name, "rows": len(self.rows), "schema_digest": self.schema.digest()}


def _line_number(position: int) -> int:
    # Header is line 1 of the file.
    return position + 2


def _parse_numeric(col: pd.Series, feature: str) -> pd.Series:
    missing = col.isin(MISSING_TOKENS)
    values = pd.to_numeric(col.where(~missing), errors="coerce")
    bad = values.isna() & ~missing
    if bad.any():
        pos = int(np.flatnonzero(bad.to_numpy())[0])
        raise DataError(f"feature '{feature}': {col.iloc[pos]!r} is not a number",
                        row_number=_line_number(pos))
    if np.isinf(values.to_numpy(dtype=float, na_value=np.nan)).any():
        pos = int(np.flatnonzero(np.isinf(values.to_numpy(dtype=float, na_value=np.nan)))[0])
        raise DataError(f"feature '{feature}': value is not finite", row_number=_line_number(pos))
    return values


def _check_field_counts(path: Path) -> None:
    """Every non-blank record must have as many fields as the header."""
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, skipinitialspace=True)
        header = next(reader, None)
        if header is None:
            return
        for record in reader:
            if record and len(record) != len(header):
                raise DataError(
                    f"malformed row: {len(record)} fields, header has {len(header)}",
                    row_number=reader.line_num,
                )


def ingest_csv(path: Path, schema_config: SchemaConfig, name: Optional[str] = None) -> Dataset:
    """
    Read a header-first, comma-separated UTF-8 file into a labelled Dataset.

    Rows with missing values are dropped (numeric gaps are median-imputed when
    the config asks for it) and counted; observed ranges are computed from the
    surviving rows.
    """
    path = Path(path)
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True,
                         encoding="utf-8")
    except pd.errors.ParserError as exc:
        match = re.search(r"line (\d+)", str(exc))
        raise DataError(f"malformed CSV: {exc}",
                        row_number=int(match.group(1)) if match else None) from exc
    _check_field_counts(path)
    df.columns = [c.strip() for c in df.columns]

    wanted = [f.name for f in schema_config.features]
    label_col = schema_config.label.column
    missing_cols = [c for c in wanted + [label_col] if c not in df.columns]
    extra_cols = [c for c in df.columns
                  if c not in wanted and c != label_col and c not in schema_config.ignore_columns]
    if missing_cols or extra_cols:
        raise SchemaError(f"header mismatch: missing={missing_cols} unexpected={extra_cols}")

    df = df.apply(lambda s: s.str.strip())
    keep = pd.Series(True, index=df.index)

    # Labels: explicit mapping, never inferred from value order.
    raw_labels = df[label_col]
    present = sorted(set(raw_labels[~raw_labels.isin(MISSING_TOKENS)]))
    if len(present) != 2:
        raise DataError(f"non-binary label: {len(present)} distinct values {present[:5]}")
    allowed = {schema_config.label.positive, schema_config.label.negative}
    stray = ~raw_labels.isin(allowed) & ~raw_labels.isin(MISSING_TOKENS)
    if stray.any():
        pos = int(np.flatnonzero(stray.to_numpy())[0])
        raise DataError(f"label {raw_labels.iloc[pos]!r} is neither configured value",
                        row_number=_line_number(pos))
    keep &= ~raw_labels.isin(MISSING_TOKENS)

    numeric_values: Dict[str, pd.Series] = {}
    categories: Dict[str, List[str]] = {}
    for spec in schema_config.features:
        col = df[spec.name]
        if spec.kind == FeatureKind.NUMERIC:
            values = _parse_numeric(col, spec.name)
            if schema_config.impute_median and values.isna().any():
                values = values.fillna(values.median())
            keep &= values.notna()
            numeric_values[spec.name] = values
        else:
            keep &= ~col.isin(MISSING_TOKENS)

    kept = df[keep]
    for spec in schema_config.features:
        if spec.kind != FeatureKind.CATEGORICAL:
            continue
        col = kept[spec.name]
        if spec.categories is None:
            categories[spec.name] = sorted(set(col))
            continue
        labels = list(spec.categories)
        unknown = ~col.isin(labels)
        if unknown.any():
            if schema_config.unknown_category == "reject":
                pos = int(df.index.get_loc(col[unknown].index[0]))
                raise DataError(f"feature '{spec.name}': unknown category {col[unknown].iloc[0]!r}",
                                row_number=_line_number(pos))
            for value in col[unknown]:
                if value not in labels:
                    labels.append(value)
        categories[spec.name] = labels

    dropped = int((~keep).sum())
    if kept.empty:
        raise DataError("no complete rows left after dropping missing values")

    features: List[FeatureSchema] = []
    for spec in schema_config.features:
        if spec.kind == FeatureKind.NUMERIC:
            values = numeric_values[spec.name][keep]
            lo, hi = float(values.min()), float(values.max())
            if not hi > lo:
                raise SchemaError(f"constant numeric feature '{spec.name}'")
            features.append(FeatureSchema(name=spec.name, kind=spec.kind,
                                          observed_min=lo, observed_max=hi))
        else:
            features.append(FeatureSchema(name=spec.name, kind=spec.kind,
                                          categories=tuple(categories[spec.name])))
    schema = TabularSchema(features=tuple(features))

    columns = []
    for spec in schema_config.features:
        if spec.kind == FeatureKind.NUMERIC:
            columns.append([float(v) for v in numeric_values[spec.name][keep]])
        else:
            columns.append(list(kept[spec.name]))
    positions = [int(p) for p in np.flatnonzero(keep.to_numpy())]
    rows = tuple(
        Instance(tuple(col[r] for col in columns), id=str(positions[r]))
        for r in range(len(kept))
    )
    labels = tuple(1 if v == schema_config.label.positive else -1 for v in kept[label_col])

    dataset = Dataset(schema=schema, rows=rows, labels=labels,
                      name=name or path.stem, dropped_rows=dropped, _validated=True)
    log.info(
        "dataset ingested",
        extra={"ctx": {**dataset.fingerprint(), "dropped_rows": dropped, "path": str(path)}},
    )
    return dataset


# -------------------------- Splitting --------------------------


def refit_schema(dataset: Dataset, indices: Sequence[int]) -> TabularSchema:
    """Schema whose numeric ranges come from the given rows only."""
    block = dataset.batch.numeric[np.asarray(indices, dtype=int)]
    if block.shape[1] == 0:
        return dataset.schema
    return dataset.schema.with_ranges(block.min(axis=0), block.max(axis=0))


def split_kfold(dataset: Dataset, folds: int, seed: int) -> List[Tuple[Dataset, Dataset]]:
    """
    Deterministic shuffled k-fold partition.

    Both halves of a fold carry the schema refitted on the training rows, so
    bin widths never depend on test data.
    """
    n = len(dataset)
    if folds < 2:
        raise DataError(f"folds must be at least 2, got {folds}")
    if folds > n:
        raise DataError(f"cannot split {n} rows into {folds} folds")

    order = np.random.default_rng(seed).permutation(n)
    parts = np.array_split(order, folds)
    out: List[Tuple[Dataset, Dataset]] = []
    for i, part in enumerate(parts):
        test_idx = np.sort(part)
        train_idx = np.sort(np.concatenate([p for j, p in enumerate(parts) if j != i]))
        schema = refit_schema(dataset, train_idx)
        train = dataset.subset(train_idx, schema=schema, name=f"{dataset.name}/fold{i}/train")
        test = dataset.subset(test_idx, schema=schema, name=f"{dataset.name}/fold{i}/test")
        out.append((train, test))
    return out
