"""
Shared records for the DP KDE structures and the benchmark harness.

Defines the tree parameterization, experiment plans, per-grid-point statistics
and the result rows written by the harness.
"""

import math
from dataclasses import dataclass
from typing import List, Literal, Optional

from dataclasses_json import dataclass_json
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..privacy.noise import PrivacyBudget


class InputDomainError(ValueError):
    """Raised when a datum, query point or input file falls outside the structure's domain."""


class TreeConfig(BaseModel):
    """Shared parameterization of every balanced tree: n, R, L and the budget."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=0, description="Dataset size")
    R: float = Field(..., description="Exclusive upper value bound, data in [0, R)")
    L: int = Field(..., ge=1, description="Total layers, root is layer 1")
    epsilon: PrivacyBudget = Field(..., description="Budget of the whole structure")

    @field_validator("R")
    @classmethod
    def bound_positive(cls, v: float) -> float:
        if not math.isfinite(v) or v <= 0:
            raise ValueError(f"R must be positive and finite, got {v}")
        return v

    @property
    def leaf_count(self) -> int:
        return 1 << (self.L - 1)

    @property
    def leaf_width(self) -> float:
        return self.R / self.leaf_count

    @property
    def node_count(self) -> int:
        return (1 << self.L) - 1


Arm = Literal["faster-l1", "baseline-blm", "lp", "l2"]
SweepVariable = Literal["epsilon", "n", "d", "alpha", "p"]


class DatasetDescriptor(BaseModel):
    """How a plan obtains its dataset: a named generator or a CSV file."""

    generator: Literal["uniform", "gaussian", "csv"] = "uniform"
    n: int = Field(default=1024, ge=0)
    d: int = Field(default=1, ge=1)
    R: float = Field(default=1.0, gt=0)
    mean: float = 0.5
    sigma: float = Field(default=0.15, ge=0)
    path: Optional[str] = None

    @model_validator(mode="after")
    def csv_needs_path(self) -> "DatasetDescriptor":
        if self.generator == "csv" and not self.path:
            raise ValueError("csv dataset descriptor requires a path")
        return self


class ExperimentPlan(BaseModel):
    """One arm swept over one variable."""

    name: str = Field(default="adhoc")
    arm: Arm
    sweep: SweepVariable
    grid: List[float] = Field(..., min_length=1)
    trials: int = Field(default=100, ge=1)
    queries: int = Field(default=32, ge=1, description="Query batch size per grid point")
    dataset: DatasetDescriptor = Field(default_factory=DatasetDescriptor)
    epsilon: float = Field(default=1.0, gt=0)
    alpha: float = Field(default=0.5, gt=0, le=1)
    p: int = Field(default=2, ge=1, le=16)
    add_noise: bool = True
    timing: bool = False
    seed: Optional[int] = Field(default=None, ge=0, lt=1 << 64)

    @field_validator("grid")
    @classmethod
    def grid_finite(cls, v: List[float]) -> List[float]:
        if any(not math.isfinite(x) for x in v):
            raise ValueError("grid values must be finite")
        return v


@dataclass_json
@dataclass(frozen=True)
class TrialStats:
    """Aggregated error and cost statistics for one grid point."""

    mean_abs_error: float
    stderr: float
    fit_M: float = 1.0
    fit_Z: float = 0.0
    median_query_ns: int = 0
    init_ms: int = 0
    op_count: int = 0
    degenerate_fit: bool = False


@dataclass_json
@dataclass
class ResultRow:
    """One line of the harness CSV; field order is the column order."""

    arm: str
    sweep_var: str
    sweep_value: float
    n: int
    d: int
    R: float
    epsilon: float
    alpha: float
    p: int
    trials: int
    mean_abs_err: float = 0.0
    stderr: float = 0.0
    fit_M: float = 1.0
    fit_Z: float = 0.0
    median_query_ns: int = 0
    init_ms: int = 0
    op_count: int = 0
    seed: int = 0
    config_hash: str = ""
    version: str = ""
    flag: str = ""

    def apply_stats(self, stats: TrialStats) -> None:
        """Copy aggregated statistics into the row."""
        self.mean_abs_err = stats.mean_abs_error
        self.stderr = stats.stderr
        self.fit_M = stats.fit_M
        self.fit_Z = stats.fit_Z
        self.median_query_ns = stats.median_query_ns
        self.init_ms = stats.init_ms
        self.op_count = stats.op_count
        if stats.degenerate_fit:
            self.flag = "degenerate-fit"


RESULT_COLUMNS: List[str] = [f for f in ResultRow.__dataclass_fields__]

__all__ = [
    "InputDomainError",
    "TreeConfig",
    "DatasetDescriptor",
    "ExperimentPlan",
    "TrialStats",
    "ResultRow",
    "RESULT_COLUMNS",
]
