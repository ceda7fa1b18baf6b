"""
One-dimensional l1 distance-sum tree with Laplace-noised counts and sums.

Layer l (1-based, root is layer 1) holds 2^(l-1) nodes; node j (0-based) covers
[j*R/2^(l-1), (j+1)*R/2^(l-1)). Every node stores the number of data points in
its interval and the sum of their values. A query for y walks from the root to
y's leaf and collects the sibling of every node on the path: left siblings hold
points below y, right siblings points above it, so

    sum_k |x_k - y| = s_right - s_left + y * c_left - y * c_right

up to the points sharing y's leaf, which are never visited.
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..logger.logger import get_logger
from ..models import InputDomainError, TreeConfig
from ..privacy.noise import (
    DEFAULT_SEED,
    STREAM_TREE,
    LaplaceScale,
    NoiseStream,
    PrivacyBudget,
    laplace_for_sensitivity,
    sample_laplace,
    split_budget,
)

logger = get_logger("l1tree")


def choose_layers(n: int) -> int:
    """Smallest L whose leaf layer has at least n intervals: 2^(L-1) >= n."""
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    return (n - 1).bit_length() + 1


def tree_config(n: int, R: float, epsilon: float, L: Optional[int] = None) -> TreeConfig:
    """Build a TreeConfig, choosing L from n unless given."""
    if L is None:
        L = choose_layers(max(n, 1))
    return TreeConfig(n=n, R=R, L=L, epsilon=PrivacyBudget(epsilon=epsilon))


def check_values(data: Any, R: float, what: str = "datum") -> np.ndarray:
    """Return ``data`` as a 1-D float array after checking it lies in [0, R).

    Raises:
        InputDomainError: On NaN/inf, values outside [0, R) or a non 1-D input
    """
    values = np.asarray(data, dtype=np.float64)
    if values.ndim != 1:
        raise InputDomainError(f"expected a 1-D sequence of values, got shape {values.shape}")
    bad = ~np.isfinite(values) | (values < 0.0) | (values >= R)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise InputDomainError(
            f"{what} {k} = {values[k]!r} is outside [0, {R!r}) "
            f"({int(bad.sum())} offending value(s)); rescale the data first"
        )
    return values


def check_query(y: float, R: float) -> float:
    """Validate a scalar query point and return it as float."""
    y = float(y)
    if not math.isfinite(y) or y < 0.0 or y >= R:
        raise InputDomainError(f"query point {y!r} is outside [0, {R!r})")
    return y


def leaf_index(values, config: TreeConfig):
    """Leaf (0-based) whose interval contains each value; works on scalars and arrays."""
    scale = config.leaf_count / config.R
    if np.ndim(values) == 0:
        return min(int(math.floor(float(values) * scale)), config.leaf_count - 1)
    idx = np.floor(np.asarray(values) * scale).astype(np.int64)
    return np.minimum(idx, config.leaf_count - 1)


def build_layers(leaves: np.ndarray, L: int) -> List[np.ndarray]:
    """Children-sum aggregation from a leaf array upwards; element 0 is the root layer.

    ``leaves`` may carry trailing axes (one column per power in the lp tree).
    """
    layers = [leaves]
    for _ in range(L - 1):
        child = layers[-1]
        layers.append(child[0::2] + child[1::2])
    layers.reverse()
    return layers


def freeze(layers: Sequence[np.ndarray]) -> Tuple[np.ndarray, ...]:
    """Mark layer arrays read-only; trees are immutable once built."""
    for arr in layers:
        arr.setflags(write=False)
    return tuple(layers)


def split_flat(flat: Sequence[float], L: int, width: int = 1) -> List[np.ndarray]:
    """Inverse of layer-major flattening."""
    arr = np.asarray(flat, dtype=np.float64)
    expected = ((1 << L) - 1) * width
    if arr.size != expected:
        raise ValueError(f"expected {expected} stored values for L={L}, got {arr.size}")
    out, start = [], 0
    for layer in range(1, L + 1):
        size = (1 << (layer - 1)) * width
        chunk = arr[start:start + size]
        out.append(chunk.reshape(-1, width) if width > 1 else chunk.copy())
        start += size
    return out


def noise_scales(config: TreeConfig) -> Tuple[LaplaceScale, LaplaceScale]:
    """Laplace scales (counts, sums): 2L/eps and 2LR/eps, eps/2 per family."""
    count_budget, sum_budget = split_budget(config.epsilon, 2)
    return (
        laplace_for_sensitivity(config.L, count_budget),
        laplace_for_sensitivity(config.L * config.R, sum_budget),
    )


@dataclass(frozen=True)
class QueryAccumulators:
    """Sibling totals collected on y's root-to-leaf path."""

    s_left: float = 0.0
    s_right: float = 0.0
    c_left: float = 0.0
    c_right: float = 0.0
    siblings: int = 0

    def distance_sum(self, y: float) -> float:
        return self.s_right - self.s_left + y * self.c_left - y * self.c_right


def decomposition_accumulators(points: Any, y: float, excluded: Optional[Tuple[float, float]] = None) -> QueryAccumulators:
    """Accumulators from exhaustive set membership: S- = {x < y}, S+ = {x >= y}.

    Points inside ``excluded`` (half-open) are left out, mirroring the leaf the
    tree never visits.
    """
    x = np.asarray(points, dtype=np.float64).ravel()
    if excluded is not None:
        lo, hi = excluded
        x = x[(x < lo) | (x >= hi)]
    left = x[x < y]
    right = x[x >= y]
    return QueryAccumulators(
        s_left=math.fsum(left),
        s_right=math.fsum(right),
        c_left=float(left.size),
        c_right=float(right.size),
        siblings=0,
    )


@dataclass(frozen=True)
class NoisyL1Tree:
    """Per-layer arrays of (noisy) counts and value sums."""

    config: TreeConfig
    counts: Tuple[np.ndarray, ...]
    sums: Tuple[np.ndarray, ...]
    noisy: bool = True

    kind = "l1"

    @property
    def node_count(self) -> int:
        return self.config.node_count

    @property
    def R(self) -> float:
        return self.config.R

    def noise_families(self) -> List[PrivacyBudget]:
        """Budgets spent by the count family and the sum family."""
        return split_budget(self.config.epsilon, 2)

    def noise_scales(self) -> Tuple[LaplaceScale, LaplaceScale]:
        return noise_scales(self.config)

    def leaf_interval(self, y: float) -> Tuple[float, float]:
        """Half-open interval of the leaf containing y."""
        j = leaf_index(check_query(y, self.R), self.config)
        w = self.config.leaf_width
        return j * w, (j + 1) * w

    def accumulate(self, y: float) -> QueryAccumulators:
        """Walk layers 2..L and collect the sibling of every node on y's path."""
        y = check_query(y, self.R)
        L = self.config.L
        leaf = leaf_index(y, self.config)
        s_left = s_right = c_left = c_right = 0.0
        siblings = 0
        for layer in range(2, L + 1):
            j = leaf >> (L - layer)
            counts, sums = self.counts[layer - 1], self.sums[layer - 1]
            if j & 1:
                c_left += counts[j - 1]
                s_left += sums[j - 1]
            else:
                c_right += counts[j + 1]
                s_right += sums[j + 1]
            siblings += 1
        return QueryAccumulators(float(s_left), float(s_right), float(c_left), float(c_right), siblings)

    def query_stats(self, y: float) -> Tuple[float, int]:
        """Answer plus the number of sibling accumulations performed."""
        acc = self.accumulate(y)
        return acc.distance_sum(float(y)), acc.siblings

    def query(self, y: float) -> float:
        return self.query_stats(y)[0]

    def operation_count(self, y: float) -> int:
        return self.accumulate(y).siblings

    def to_dict(self) -> Dict[str, Any]:
        """Layer-major flat dump, counts then sums."""
        return {
            "kind": self.kind,
            "noisy": self.noisy,
            "config": self.config.model_dump(),
            "counts": np.concatenate(self.counts).tolist(),
            "sums": np.concatenate(self.sums).tolist(),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "NoisyL1Tree":
        config = TreeConfig.model_validate(payload["config"])
        return cls(
            config=config,
            counts=freeze(split_flat(payload["counts"], config.L)),
            sums=freeze(split_flat(payload["sums"], config.L)),
            noisy=bool(payload.get("noisy", True)),
        )


def init_tree(
    data: Any,
    config: TreeConfig,
    add_noise: bool = True,
    stream: Optional[NoiseStream] = None,
) -> NoisyL1Tree:
    """Build the tree over 1-D data in [0, R).

    Leaves accumulate counts and value sums with one bincount pass; parents are
    children sums. With ``add_noise`` every count gets Laplace(2L/eps) and every
    sum Laplace(2LR/eps): each family spends eps/2 and one datum moves exactly
    one node per layer, by at most 1 (count) or R (sum).

    Args:
        data: Values in [0, R)
        config: Tree parameters; ``config.n`` is informational
        add_noise: False builds the exact (non-private) tree
        stream: Noise source; defaults to the root-seed tree stream

    Returns:
        Immutable NoisyL1Tree

    Raises:
        InputDomainError: If any datum is outside [0, R) or not finite
    """
    values = check_values(data, config.R)
    leaves = leaf_index(values, config)
    counts = build_layers(np.bincount(leaves, minlength=config.leaf_count).astype(np.float64), config.L)
    sums = build_layers(np.bincount(leaves, weights=values, minlength=config.leaf_count), config.L)

    if add_noise:
        stream = stream or NoiseStream(DEFAULT_SEED).child(STREAM_TREE)
        count_scale, sum_scale = noise_scales(config)
        count_noise = sample_laplace(count_scale, stream, config.node_count)
        sum_noise = sample_laplace(sum_scale, stream, config.node_count)
        start = 0
        for layer in range(config.L):
            size = 1 << layer
            counts[layer] = counts[layer] + count_noise[start:start + size]
            sums[layer] = sums[layer] + sum_noise[start:start + size]
            start += size

    logger.debug(
        "built l1 tree n=%d L=%d nodes=%d eps=%g noisy=%s",
        values.size, config.L, config.node_count, config.epsilon.epsilon, add_noise,
    )
    return NoisyL1Tree(config=config, counts=freeze(counts), sums=freeze(sums), noisy=add_noise)


def query(tree: NoisyL1Tree, y: float) -> float:
    """Distance sum sum_k |x_k - y| over points outside y's leaf, from the (noisy) tree."""
    return tree.query(y)


def analytic_query_variance(config: TreeConfig, y: float, siblings: Optional[int] = None) -> float:
    """Variance of a noisy answer at y: per sibling 2(2LR/eps)^2 + y^2 * 2(2L/eps)^2.

    Every query accumulates exactly L-1 siblings unless ``siblings`` says otherwise.
    """
    if siblings is None:
        siblings = config.L - 1
    eps, L, R = config.epsilon.epsilon, config.L, config.R
    sum_var = 2.0 * (2.0 * L * R / eps) ** 2
    count_var = 2.0 * (2.0 * L / eps) ** 2
    return siblings * (sum_var + y * y * count_var)
