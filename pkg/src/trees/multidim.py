"""
d-dimensional distance sums from d independent one-dimensional structures.

Coordinate i of every point feeds its own structure built at eps/d with the
stream ``stream.child(i)``; a query sums the per-coordinate answers in
dimension order, so the result is bit-stable for a fixed noise draw.
"""

from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from ..logger.logger import get_logger
from ..models import InputDomainError, TreeConfig
from ..privacy.noise import DEFAULT_SEED, STREAM_TREE, NoiseStream, PrivacyBudget, split_budget
from .l1tree import choose_layers, init_tree

logger = get_logger("multidim")

Builder = Callable[[np.ndarray, float, PrivacyBudget, bool, NoiseStream], Any]


def l1_builder(L: Optional[int] = None) -> Builder:
    """Per-coordinate builder producing NoisyL1Tree with L = choose_layers(n) unless given."""

    def build(values: np.ndarray, R: float, budget: PrivacyBudget, add_noise: bool, stream: NoiseStream):
        n = len(values)
        layers = L if L is not None else choose_layers(max(n, 1))
        return init_tree(values, TreeConfig(n=n, R=R, L=layers, epsilon=budget), add_noise, stream)

    return build


def as_point_matrix(points: Any, dim: Optional[int] = None) -> np.ndarray:
    """Return points as an (n, d) float array.

    Raises:
        InputDomainError: If rows have different lengths or the array is not 2-D
    """
    try:
        arr = np.asarray(points, dtype=np.float64)
    except ValueError as e:
        raise InputDomainError(f"dimension mismatch among points: {e}") from e
    if arr.size == 0 and dim is not None:
        return arr.reshape(0, dim)
    if arr.ndim != 2:
        raise InputDomainError(f"expected an (n, d) array of points, got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise InputDomainError(f"points have {arr.shape[1]} coordinates, expected {dim}")
    return arr


def as_query_vector(y: Any, dim: int) -> np.ndarray:
    vec = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if vec.ndim != 1 or vec.size != dim:
        raise InputDomainError(f"query has shape {vec.shape}, expected {dim} coordinates")
    return vec


@dataclass(frozen=True)
class HighDimTree:
    """d one-dimensional structures sharing n, R and L, each at totalBudget/d."""

    dim: int
    trees: Tuple[Any, ...]
    total_budget: PrivacyBudget

    kind = "multidim"

    @property
    def R(self) -> float:
        return self.trees[0].R

    @property
    def node_count(self) -> int:
        return sum(t.node_count for t in self.trees)

    @property
    def L(self) -> int:
        return self.trees[0].config.L

    def noise_families(self) -> List[PrivacyBudget]:
        """Every noise family of every coordinate structure."""
        return [b for t in self.trees for b in t.noise_families()]

    def query_stats(self, y: Any) -> Tuple[float, int]:
        vec = as_query_vector(y, self.dim)
        total, ops = 0.0, 0
        for tree, coord in zip(self.trees, vec):
            value, count = tree.query_stats(coord)
            total += value
            ops += count
        return total, ops

    def query(self, y: Any) -> float:
        return self.query_stats(y)[0]

    def operation_count(self, y: Any) -> int:
        return self.query_stats(y)[1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "dim": self.dim,
            "total_budget": self.total_budget.model_dump(),
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any], load_child: Callable[[Dict[str, Any]], Any]) -> "HighDimTree":
        trees = tuple(load_child(t) for t in payload["trees"])
        if len(trees) != int(payload["dim"]):
            raise ValueError(f"structure declares {payload['dim']} dimensions but stores {len(trees)}")
        return cls(dim=len(trees), trees=trees, total_budget=PrivacyBudget.model_validate(payload["total_budget"]))


def init_high_dim(
    points: Any,
    R: float,
    epsilon: float,
    add_noise: bool = True,
    stream: Optional[NoiseStream] = None,
    builder: Optional[Builder] = None,
    dim: Optional[int] = None,
) -> HighDimTree:
    """Build one structure per coordinate with the budget split d ways.

    Args:
        points: (n, d) values in [0, R)^d
        R: Shared coordinate bound
        epsilon: Total budget; each coordinate structure gets epsilon/d
        add_noise: False builds exact structures
        stream: Parent stream; coordinate i uses ``stream.child(i)``
        builder: Per-coordinate builder (l1 trees by default)
        dim: Dimension, required only when ``points`` is empty

    Raises:
        InputDomainError: On ragged points or coordinates outside [0, R)
    """
    pts = as_point_matrix(points, dim)
    d = pts.shape[1]
    if d < 1:
        raise InputDomainError("points must have at least one coordinate")
    builder = builder or l1_builder()
    stream = stream or NoiseStream(DEFAULT_SEED).child(STREAM_TREE)
    total = PrivacyBudget(epsilon=epsilon)
    budgets = split_budget(total, d)

    trees = []
    for i in range(d):
        try:
            trees.append(builder(pts[:, i], R, budgets[i], add_noise, stream.child(i)))
        except InputDomainError as e:
            raise InputDomainError(f"coordinate {i}: {e}") from e

    logger.debug("built %d-dimensional structure n=%d eps=%g (eps/d=%g)", d, pts.shape[0], epsilon, budgets[0].epsilon)
    return HighDimTree(dim=d, trees=tuple(trees), total_budget=total)


def query_high_dim(tree: HighDimTree, y: Any) -> float:
    """Sum of the per-coordinate answers, in dimension order."""
    return tree.query(y)
