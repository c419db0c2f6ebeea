"""
Actions: sparse sets of feature changes applied uniformly to instances.

A numeric change is a translation in raw units; a categorical change sets the
feature to a target label. Cost follows the decile geometry of the schema:
|delta| / bin_width per numeric change, plus 1 per categorical feature whose
value actually changes.
"""

import json
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from errors import DataError, SchemaError
from services.tabular import Instance, TabularBatch, TabularSchema, encode_batch


@dataclass(frozen=True)
class NumericDelta:
    delta: float


@dataclass(frozen=True)
class CategoricalSet:
    target: str


Change = Union[NumericDelta, CategoricalSet]


@dataclass(frozen=True)
class Action:
    """Immutable change set; `changes` is kept sorted by feature name."""

    changes: Tuple[Tuple[str, Change], ...] = ()

    @classmethod
    def from_mapping(cls, changes: Mapping[str, Change]) -> "Action":
        return cls(tuple(sorted(changes.items(), key=lambda kv: kv[0])))

    @classmethod
    def empty(cls) -> "Action":
        return cls(())

    @property
    def mapping(self) -> Dict[str, Change]:
        return dict(self.changes)

    def __len__(self) -> int:
        return len(self.changes)

    @property
    def key(self) -> str:
        """Canonical rendering used for deduplication and stable ordering."""
        return json.dumps(self.to_record(), sort_keys=True)

    def to_record(self) -> Dict[str, Dict[str, Any]]:
        out: Dict[str, Dict[str, Any]] = {}
        for name, change in self.changes:
            if isinstance(change, NumericDelta):
                out[name] = {"delta": change.delta}
            else:
                out[name] = {"set": change.target}
        return out

    @classmethod
    def from_record(cls, record: Mapping[str, Mapping[str, Any]]) -> "Action":
        changes: Dict[str, Change] = {}
        for name, body in record.items():
            if set(body) == {"delta"}:
                changes[name] = NumericDelta(float(body["delta"]))
            elif set(body) == {"set"}:
                changes[name] = CategoricalSet(str(body["set"]))
            else:
                raise SchemaError(f"change for '{name}' must be {{'delta': x}} or {{'set': label}}")
        return cls.from_mapping(changes)

    def validate(self, schema: TabularSchema) -> None:
        for name, change in self.changes:
            feat = schema.feature(name)
            if isinstance(change, NumericDelta):
                if not feat.is_numeric:
                    raise SchemaError(f"numeric delta on categorical feature '{name}'")
                if not np.isfinite(change.delta):
                    raise SchemaError(f"non-finite delta on '{name}'")
            else:
                if feat.is_numeric:
                    raise SchemaError(f"categorical set on numeric feature '{name}'")
                if change.target not in schema.category_index[name]:
                    raise SchemaError(f"unknown category {change.target!r} for '{name}'")

    def __str__(self) -> str:
        parts = []
        for name, change in self.changes:
            if isinstance(change, NumericDelta):
                parts.append(f"{name} {change.delta:+g}")
            else:
                parts.append(f"{name} = {change.target}")
        return "{" + ", ".join(parts) + "}"


def dedup(actions: Sequence[Action]) -> List[Action]:
    """Drop repeated actions, keeping first occurrences."""
    seen, out = set(), []
    for a in actions:
        if a not in seen:
            seen.add(a)
            out.append(a)
    return out


# -------------------------- Application --------------------------


def apply(action: Action, x: Instance, schema: TabularSchema) -> Instance:
    values = list(x.values)
    for name, change in action.changes:
        i = schema.positions[name]
        if isinstance(change, NumericDelta):
            values[i] = float(values[i]) + change.delta
        else:
            values[i] = change.target
    return Instance(tuple(values), x.id)


def apply_batch(action: Action, batch: TabularBatch, schema: TabularSchema) -> TabularBatch:
    """Apply one action to every row; the input batch is not modified."""
    out = batch.copy()
    for name, change in action.changes:
        col = schema.column_of[name]
        if isinstance(change, NumericDelta):
            out.numeric[:, col] += change.delta
        else:
            out.categorical[:, col] = schema.category_index[name][change.target]
    return out


def apply_encoded(action: Action, batch: TabularBatch, schema: TabularSchema) -> np.ndarray:
    return encode_batch(apply_batch(action, batch, schema), schema)


# -------------------------- Cost --------------------------


def cost_batch(action: Action, batch: TabularBatch, schema: TabularSchema) -> np.ndarray:
    """Cost of the action for every row of the batch."""
    total = np.zeros(len(batch), dtype=float)
    for name, change in action.changes:
        col = schema.column_of[name]
        if isinstance(change, NumericDelta):
            total += abs(change.delta) / schema.bin_widths[col]
        else:
            target = schema.category_index[name][change.target]
            total += (batch.categorical[:, col] != target).astype(float)
    return total


def cost(action: Action, x: Instance, schema: TabularSchema) -> float:
    total = 0.0
    for name, change in action.changes:
        feat = schema.feature(name)
        if isinstance(change, NumericDelta):
            total += abs(change.delta) / feat.bin_width
        elif x.values[schema.positions[name]] != change.target:
            total += 1.0
    return total


# -------------------------- Action space --------------------------


def to_action_vector(action: Action, schema: TabularSchema) -> np.ndarray:
    vec = np.zeros(schema.dimension, dtype=float)
    for name, change in action.changes:
        i = schema.positions[name]
        if isinstance(change, NumericDelta):
            vec[schema.offsets[i]] = change.delta / schema.features[i].bin_width
        else:
            vec[schema.offsets[i] + schema.category_index[name][change.target]] = 1.0
    return vec


def mean_action_vector(actions: Sequence[Action], schema: TabularSchema) -> np.ndarray:
    if not actions:
        raise DataError("mean_action_vector needs at least one action")
    return np.mean([to_action_vector(a, schema) for a in actions], axis=0)


def action_between(source: Instance, target: Instance, schema: TabularSchema,
                   fraction: float = 1.0, switch_categoricals: bool = True) -> Action:
    """
    Action moving `source` towards `target`: numerics by `fraction` of their
    difference, categoricals to the target label when `switch_categoricals`.
    Features that would not change are omitted.
    """
    changes: Dict[str, Change] = {}
    for i, feat in enumerate(schema.features):
        a, b = source.values[i], target.values[i]
        if feat.is_numeric:
            delta = fraction * (float(b) - float(a))
            if delta != 0.0:
                changes[feat.name] = NumericDelta(delta)
        elif switch_categoricals and a != b:
            changes[feat.name] = CategoricalSet(b)
    return Action.from_mapping(changes)


def load_actions(records: Sequence[Mapping[str, Mapping[str, Any]]],
                 schema: Optional[TabularSchema] = None) -> List[Action]:
    actions = [Action.from_record(r) for r in records]
    if schema is not None:
        for a in actions:
            a.validate(schema)
    return actions
