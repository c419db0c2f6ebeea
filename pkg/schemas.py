"""
Data schemas for configuration and report validation.

These models are the contract between the CLI, the per-fold workflow and the
files written to disk (run configs, evaluation records, reports, fixtures).
"""

from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class FeatureKind(str, Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"


# -------------------------- Dataset configuration --------------------------


class FeatureSpec(BaseModel):
    """One column of the input CSV, as declared by the user."""

    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., min_length=1)
    kind: FeatureKind
    # Categorical only; inferred (sorted) from the data when omitted.
    categories: Optional[List[str]] = None

    @model_validator(mode="after")
    def _categories_only_for_categoricals(self) -> "FeatureSpec":
        if self.kind == FeatureKind.NUMERIC and self.categories:
            raise ValueError(f"numeric feature '{self.name}' cannot declare categories")
        if self.categories is not None and len(set(self.categories)) != len(self.categories):
            raise ValueError(f"duplicate category labels in '{self.name}'")
        return self


class LabelSpec(BaseModel):
    """Explicit mapping of the raw label column onto {-1, +1}."""

    model_config = ConfigDict(extra="forbid")

    column: str = Field(..., min_length=1)
    positive: str
    negative: str

    @model_validator(mode="after")
    def _distinct(self) -> "LabelSpec":
        if self.positive == self.negative:
            raise ValueError("label positive and negative values must differ")
        return self


class SchemaConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    features: List[FeatureSpec] = Field(..., min_length=1)
    label: LabelSpec
    unknown_category: Literal["reject", "add"] = "reject"
    # Median imputation for numeric gaps instead of dropping the row.
    impute_median: bool = False
    ignore_columns: List[str] = Field(default_factory=list)

    @field_validator("features")
    @classmethod
    def _unique_names(cls, v: List[FeatureSpec]) -> List[FeatureSpec]:
        names = [f.name for f in v]
        if len(set(names)) != len(names):
            raise ValueError("feature names must be unique")
        return v


class DatasetConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = Field(..., min_length=1)
    path: Path
    schema_config: SchemaConfig = Field(..., alias="schema")


# -------------------------- Models --------------------------


class ModelKind(str, Enum):
    LOGISTIC = "logistic"
    KNN = "knn"


class ModelConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: ModelKind = ModelKind.LOGISTIC
    learning_rate: float = Field(default=0.1, gt=0.0)
    iterations: int = Field(default=2000, ge=1)
    l2: float = Field(default=1e-3, ge=0.0)
    seed: int = 13
    k_nn: int = Field(default=5, ge=1)

    @field_validator("k_nn")
    @classmethod
    def _odd(cls, v: int) -> int:
        if v % 2 == 0:
            raise ValueError("k_nn must be odd so that majority votes are strict")
        return v


# -------------------------- GLANCE --------------------------


class GeneratorKind(str, Enum):
    RANDOM_SAMPLING = "random_sampling"
    NEAREST_NEIGHBORS = "nearest_neighbors"
    NEAREST_NEIGHBORS_SCALED = "nearest_neighbors_scaled"


class GeneratorConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: GeneratorKind = GeneratorKind.RANDOM_SAMPLING
    m: int = Field(default=10, ge=1)
    k_f: int = Field(default=3, ge=1)
    k_c: int = Field(default=10, ge=1)
    line_samples: int = Field(default=20, ge=2)
    seed: int = 13
    # Proposals per requested candidate for random sampling.
    proposal_factor: int = Field(default=50, ge=1)


class SelectionKind(str, Enum):
    MAX_EFFECTIVENESS = "max_effectiveness"
    MIN_COST = "min_cost"
    MIN_COST_ABOVE_EFF = "min_cost_above_eff"
    MAX_EFF_BELOW_COST = "max_eff_below_cost"


class SelectionStrategy(BaseModel):
    """How the final action of each surviving cluster is picked."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: SelectionKind = SelectionKind.MAX_EFFECTIVENESS
    threshold: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    budget: Optional[float] = Field(default=None, ge=0.0)

    @model_validator(mode="after")
    def _parameters(self) -> "SelectionStrategy":
        if self.kind == SelectionKind.MIN_COST_ABOVE_EFF and self.threshold is None:
            raise ValueError("min_cost_above_eff needs a threshold in [0, 1]")
        if self.kind == SelectionKind.MAX_EFF_BELOW_COST and self.budget is None:
            raise ValueError("max_eff_below_cost needs a budget >= 0")
        return self


class GlanceConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    s: int = Field(default=4, ge=1)
    k: int = Field(default=100, ge=1)
    m: int = Field(default=10, ge=1)
    generator: GeneratorConfig = Field(default_factory=GeneratorConfig)
    selection: SelectionStrategy = Field(default_factory=SelectionStrategy)
    selection_scope: Literal["cluster", "global"] = "cluster"
    seed: int = 13
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _s_within_k(self) -> "GlanceConfig":
        if self.s > self.k:
            raise ValueError(f"s={self.s} exceeds k={self.k}")
        return self

    def generator_config(self) -> GeneratorConfig:
        """Generator settings with m and seed taken from this config."""
        return self.generator.model_copy(update={"m": self.m, "seed": self.seed})


# -------------------------- Run --------------------------


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = Field(default="run", min_length=1)
    dataset: DatasetConfig
    model: ModelConfig = Field(default_factory=ModelConfig)
    glance: GlanceConfig = Field(default_factory=GlanceConfig)
    folds: int = Field(default=5, ge=2)
    seed: int = 13
    output_dir: Optional[Path] = None
    jobs: int = Field(default=1, ge=1)
    # Percent; the run exits non-zero when the mean effectiveness is lower.
    min_effectiveness: Optional[float] = Field(default=None, ge=0.0, le=100.0)
    curve_grid: Optional[List[float]] = None
    dump_candidates: bool = False
    dump_assignments: bool = False

    @field_validator("curve_grid")
    @classmethod
    def _sorted_grid(cls, v: Optional[List[float]]) -> Optional[List[float]]:
        if v is not None and any(b < a for a, b in zip(v, v[1:])):
            raise ValueError("curve_grid must be sorted ascending")
        return v


# -------------------------- Evaluation --------------------------


class EvalRecord(BaseModel):
    """One method's aggregated result on one dataset/model/s combination."""

    model_config = ConfigDict(extra="forbid")

    method: str
    dataset: str
    model: str
    s: int = Field(..., ge=1)
    eff_mean: float = Field(..., ge=0.0, le=100.0)
    eff_std: float = Field(default=0.0, ge=0.0)
    cost_mean: Optional[float] = Field(default=None, ge=0.0)
    cost_std: float = Field(default=0.0, ge=0.0)
    size_actual: int = Field(default=0, ge=0)
    runtime_seconds: float = Field(default=0.0, ge=0.0)
    folds: int = Field(default=1, ge=1)
    cost_folds_excluded: int = Field(default=0, ge=0)
    # Per-fold values, when known (enables fold-by-fold dominance).
    fold_eff: Optional[List[float]] = None
    fold_cost: Optional[List[Optional[float]]] = None

    @property
    def key(self) -> tuple:
        return (self.dataset, self.model, self.s)


class CurvePoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    cost_threshold: float
    covered_fraction: float = Field(..., ge=0.0, le=1.0)


class RecordFlags(BaseModel):
    model_config = ConfigDict(frozen=True)

    practical: bool
    robust: bool
    eff_robust: bool
    cost_robust: bool


class ActionDiagnosticModel(BaseModel):
    action: Dict[str, Dict[str, Any]]
    source_cluster: int
    cluster_size: int
    local_effectiveness: float
    local_cost: Optional[float] = None


class FoldResult(BaseModel):
    fold: int
    train_rows: int
    test_rows: int
    train_accuracy: float
    test_accuracy: float
    affected: int
    effectiveness: float
    average_cost: Optional[float] = None
    size: int
    actions: List[ActionDiagnosticModel] = Field(default_factory=list)
    curve: List[CurvePoint] = Field(default_factory=list)
    warnings: List[str] = Field(default_factory=list)


class RunReport(BaseModel):
    """Deterministic result body: no timestamps, hosts or timings."""

    schema_version: str = "1.0"
    config_digest: str
    dataset_fingerprint: Dict[str, Any]
    seeds: Dict[str, int]
    folds: List[FoldResult]
    record: Dict[str, Any]
    flags: RecordFlags
    gates: Dict[str, bool] = Field(default_factory=dict)
