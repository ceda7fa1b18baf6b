"""
Seeded Laplace noise and pure-DP budget bookkeeping.

Every stochastic operation in the package draws from a ``NoiseStream``. A stream
is identified by the root seed plus a derivation path of non-negative integers,
for example ``(STREAM_TREE, dimension)`` or ``(STREAM_TRIAL, grid_index, trial)``;
the same (seed, path, call sequence) always yields the same values.
"""

import math
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

DEFAULT_SEED = 0xDEADBEEF

# First element of a derivation path.
STREAM_DATASET = 0
STREAM_TREE = 1
STREAM_QUERIES = 2
STREAM_TRIAL = 3
STREAM_EMBEDDING = 4

_OPEN_UNIT_BITS = 53


class BudgetError(ValueError):
    """Raised when budgets cannot be composed or split under pure DP."""


class LaplaceScale(BaseModel):
    """Scale parameter of a zero-mean Laplace distribution."""

    model_config = ConfigDict(frozen=True)

    lam: float = Field(..., description="Scale, in the units of the noised quantity")

    @field_validator("lam")
    @classmethod
    def scale_positive(cls, v: float) -> float:
        if not math.isfinite(v) or v <= 0:
            raise ValueError(f"Laplace scale must be positive and finite, got {v}")
        return v

    @property
    def variance(self) -> float:
        return 2.0 * self.lam * self.lam


class PrivacyBudget(BaseModel):
    """An (epsilon, delta) budget; delta is 0 for every mechanism in this package."""

    model_config = ConfigDict(frozen=True)

    epsilon: float
    delta: float = 0.0

    @field_validator("epsilon")
    @classmethod
    def epsilon_positive(cls, v: float) -> float:
        if not math.isfinite(v) or v <= 0:
            raise ValueError(f"epsilon must be positive and finite, got {v}")
        return v

    @field_validator("delta")
    @classmethod
    def delta_in_range(cls, v: float) -> float:
        if not 0.0 <= v < 1.0:
            raise ValueError(f"delta must lie in [0, 1), got {v}")
        return v

    @property
    def is_pure(self) -> bool:
        return self.delta == 0.0


PathElement = Union[int, np.integer]


class NoiseStream:
    """Single-owner random stream derived from a root seed and a path.

    A stream may be handed to another thread but must not be shared by two
    threads at once; derive a child per worker instead.
    """

    def __init__(self, seed: int = DEFAULT_SEED, path: Sequence[PathElement] = ()):
        if not 0 <= int(seed) < (1 << 64):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        if any(int(p) < 0 for p in path):
            raise ValueError(f"derivation path elements must be non-negative: {tuple(path)}")
        self.seed = int(seed)
        self.path: Tuple[int, ...] = tuple(int(p) for p in path)
        self.rng = np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=self.path))

    def child(self, *path: PathElement) -> "NoiseStream":
        """Derive an independent stream whose path extends this one."""
        return NoiseStream(self.seed, self.path + tuple(int(p) for p in path))

    def open_uniform(self, size=None):
        """Uniform draws on the open interval (0, 1), on a 2^-53 grid."""
        k = self.rng.integers(0, 1 << _OPEN_UNIT_BITS, size=size, dtype=np.int64)
        return (k + 0.5) / float(1 << _OPEN_UNIT_BITS)

    def __repr__(self) -> str:
        return f"NoiseStream(seed={self.seed:#x}, path={self.path})"


def sample_laplace(scale: LaplaceScale, stream: NoiseStream, size: Optional[Union[int, Tuple[int, ...]]] = None):
    """Draw zero-mean Laplace noise by inverting the CDF of an open uniform draw.

    With u uniform on (-1/2, 1/2), x = -lam * sign(u) * ln(1 - 2|u|).

    Args:
        scale: Laplace scale lam (variance 2 lam^2)
        stream: Stream to advance
        size: None for a single float, otherwise an array shape

    Returns:
        A float or an ndarray of draws
    """
    u = stream.open_uniform(size) - 0.5
    x = -scale.lam * np.sign(u) * np.log1p(-2.0 * np.abs(u))
    if size is None:
        return float(x)
    return x


def compose_budgets(parts: Sequence[PrivacyBudget]) -> PrivacyBudget:
    """Basic composition of pure-DP budgets: the epsilons add up.

    Raises:
        BudgetError: If ``parts`` is empty or any part has delta > 0
    """
    if not parts:
        raise BudgetError("cannot compose an empty list of budgets")
    impure = [b for b in parts if not b.is_pure]
    if impure:
        raise BudgetError(
            f"only pure-DP composition is supported; got {len(impure)} part(s) with delta > 0"
        )
    return PrivacyBudget(epsilon=math.fsum(b.epsilon for b in parts))


def split_budget(total: PrivacyBudget, ways: int) -> List[PrivacyBudget]:
    """Split a pure budget into ``ways`` equal parts that compose back to ``total``."""
    if ways < 1:
        raise ValueError(f"ways must be a positive integer, got {ways}")
    if not total.is_pure:
        raise BudgetError("only pure-DP budgets can be split")
    part = PrivacyBudget(epsilon=total.epsilon / ways)
    return [part] * ways


def laplace_for_sensitivity(sensitivity: float, budget: PrivacyBudget) -> LaplaceScale:
    """Scale of the Laplace mechanism releasing an l1-sensitivity-bounded vector at ``budget``."""
    return LaplaceScale(lam=sensitivity / budget.epsilon)
