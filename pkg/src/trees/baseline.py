"""
Node-contaminated counting tree with geometric distance regions.

Reconstruction of the prior range-counting approach used as the comparison arm.
Inputs are rounded to the grid {0, r0, 2*r0, ..., R} with r0 = R/n, a balanced
tree of noisy counts is built over the grid, and a distance sum at y is
approximated by counting the points in bands around y:

* the inner band |v - y| <= r0, charged at distance r0
* right bands y + (r_i, r_{i+1}] and their mirrors on the left, with
  r_0 = r0 and r_{i+1} = (1 + alpha) * r_i, charged at one endpoint distance

Each band is a contiguous range of grid indices answered by the canonical
bottom-up decomposition of the tree.
"""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Dict, Iterator, List, Literal, Optional, Tuple

import numpy as np

from ..logger.logger import get_logger
from ..models import TreeConfig
from ..privacy.noise import (
    DEFAULT_SEED,
    STREAM_TREE,
    LaplaceScale,
    NoiseStream,
    PrivacyBudget,
    laplace_for_sensitivity,
    sample_laplace,
)
from .l1tree import build_layers, check_query, check_values, choose_layers, split_flat

logger = get_logger("baseline")

Representative = Literal["lower", "upper"]
REPRESENTATIVES = ("lower", "upper")


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not math.isfinite(alpha) or not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    return alpha


def check_representative(representative: str) -> str:
    if representative not in REPRESENTATIVES:
        raise ValueError(f"representative must be one of {REPRESENTATIVES}, got {representative!r}")
    return representative


def grid_size(n: int) -> int:
    """Number of grid steps G = max(n, 1); the grid has G + 1 points 0..G."""
    return max(int(n), 1)


def counting_tree_config(n: int, R: float, epsilon: float, L: Optional[int] = None) -> TreeConfig:
    """Config whose leaf layer holds every grid point 0..G."""
    if L is None:
        L = choose_layers(grid_size(n) + 1)
    return TreeConfig(n=n, R=R, L=L, epsilon=PrivacyBudget(epsilon=epsilon))


def round_to_grid(data: Any, n: int, R: float) -> np.ndarray:
    """Grid index of each value: nearest multiple of R/G, so every value moves by at most r0/2."""
    values = check_values(data, R)
    G = grid_size(n)
    return np.clip(np.rint(values * (G / R)), 0, G).astype(np.int64)


def noise_scale(config: TreeConfig) -> LaplaceScale:
    """Counts only: one datum moves one node per layer, scale 2L/eps at the full budget."""
    return laplace_for_sensitivity(2.0 * config.L, config.epsilon)


def canonical_nodes(lo: int, hi: int, L: int) -> Iterator[Tuple[int, int]]:
    """(layer, index) of the canonical cover of leaves [lo, hi); layer 0 is the root.

    Touches at most two nodes per layer below the root.
    """
    layer = L - 1
    while lo < hi:
        if lo & 1:
            yield layer, lo
            lo += 1
        if hi & 1:
            hi -= 1
            yield layer, hi
        lo >>= 1
        hi >>= 1
        layer -= 1


@dataclass(frozen=True)
class Region:
    """A band of grid indices [lo, hi) whose points sit at distance (inner, outer] from y."""

    side: Literal["inner", "right", "left"]
    inner: float
    outer: float
    distance: float
    lo: int
    hi: int


@dataclass(frozen=True)
class GeometricRegions:
    y: float
    step: float
    regions: Tuple[Region, ...]

    def __len__(self) -> int:
        return len(self.regions)


def geometric_regions(
    y: float,
    R: float,
    n: int,
    alpha: float,
    representative: str = "lower",
) -> GeometricRegions:
    """Tile the grid around y into the inner band and the (1+alpha)-geometric bands."""
    G = grid_size(n)
    step = R / G
    top = G + 1

    def cut_right(r: float) -> int:
        # first grid index with v - y > r
        return min(max(math.floor((y + r) / step) + 1, 0), top)

    def cut_left(r: float) -> int:
        # first grid index with y - v <= r
        return min(max(math.ceil((y - r) / step), 0), top)

    regions: List[Region] = [Region("inner", 0.0, step, step, cut_left(step), cut_right(step))]
    r = step
    while r < R:
        nxt = r * (1.0 + alpha)
        rep = r if representative == "lower" else nxt
        regions.append(Region("right", r, nxt, rep, cut_right(r), cut_right(nxt)))
        regions.append(Region("left", r, nxt, rep, cut_left(nxt), cut_left(r)))
        r = nxt
    return GeometricRegions(y=y, step=step, regions=tuple(regions))


@lru_cache(maxsize=8192)
def query_plan(y: float, R: float, n: int, L: int, alpha: float, representative: str) -> Tuple[np.ndarray, np.ndarray]:
    """Flat node indices and the distance weight of each, for the answer at y.

    The plan depends on the tree's shape only, so rebuilt trees with fresh
    noise reuse it.
    """
    index: List[int] = []
    weight: List[float] = []
    for region in geometric_regions(y, R, n, alpha, representative).regions:
        for layer, j in canonical_nodes(region.lo, region.hi, L):
            index.append((1 << layer) - 1 + j)
            weight.append(region.distance)
    idx = np.asarray(index, dtype=np.int64)
    wts = np.asarray(weight, dtype=np.float64)
    idx.setflags(write=False)
    wts.setflags(write=False)
    return idx, wts


@dataclass(frozen=True)
class IntervalCount:
    value: float
    nodes: int
    clipped: bool = False


@dataclass(frozen=True)
class CountingTree:
    """Noisy counts over the rounding grid, stored layer-major in one flat array."""

    config: TreeConfig
    flat: np.ndarray
    alpha: float
    representative: str = "lower"
    noisy: bool = True

    kind = "baseline"

    @property
    def R(self) -> float:
        return self.config.R

    @property
    def grid(self) -> int:
        return grid_size(self.config.n)

    @property
    def step(self) -> float:
        return self.config.R / self.grid

    @property
    def node_count(self) -> int:
        return self.config.node_count

    @property
    def counts(self) -> Tuple[np.ndarray, ...]:
        return tuple(self.flat[(1 << l) - 1:(1 << (l + 1)) - 1] for l in range(self.config.L))

    def noise_families(self) -> List[PrivacyBudget]:
        return [self.config.epsilon]

    def range_count(self, lo: int, hi: int) -> IntervalCount:
        """Sum over grid indices [lo, hi) through the canonical decomposition."""
        lo, hi = max(lo, 0), min(hi, self.config.leaf_count)
        total, nodes = 0.0, 0
        for layer, j in canonical_nodes(lo, hi, self.config.L):
            total += float(self.flat[(1 << layer) - 1 + j])
            nodes += 1
        return IntervalCount(value=total, nodes=nodes)

    def regions(self, y: float) -> GeometricRegions:
        y = check_query(y, self.R)
        return geometric_regions(y, self.R, self.config.n, self.alpha, self.representative)

    def query_stats(self, y: float) -> Tuple[float, int]:
        """Answer at y recomputing the decomposition, plus the number of nodes touched."""
        y = check_query(y, self.R)
        idx, wts = query_plan.__wrapped__(y, self.R, self.config.n, self.config.L, self.alpha, self.representative)
        return float(np.dot(wts, self.flat[idx])), int(idx.size)

    def query(self, y: float) -> float:
        y = check_query(y, self.R)
        idx, wts = query_plan(y, self.R, self.config.n, self.config.L, self.alpha, self.representative)
        return float(np.dot(wts, self.flat[idx]))

    def operation_count(self, y: float) -> int:
        return self.query_stats(y)[1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "noisy": self.noisy,
            "alpha": self.alpha,
            "representative": self.representative,
            "config": self.config.model_dump(),
            "counts": self.flat.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "CountingTree":
        config = TreeConfig.model_validate(payload["config"])
        flat = np.concatenate(split_flat(payload["counts"], config.L))
        flat.setflags(write=False)
        return cls(
            config=config,
            flat=flat,
            alpha=check_alpha(payload["alpha"]),
            representative=check_representative(payload.get("representative", "lower")),
            noisy=bool(payload.get("noisy", True)),
        )


def init_counting_tree(
    data: Any,
    config: TreeConfig,
    alpha: float,
    add_noise: bool = True,
    stream: Optional[NoiseStream] = None,
    representative: str = "lower",
) -> CountingTree:
    """Round the data to the grid and build the noisy counting tree.

    Args:
        data: Values in [0, R)
        config: Tree parameters; ``config.n`` fixes the grid step R/n
        alpha: Geometric band ratio in (0, 1]
        add_noise: False builds exact counts
        stream: Noise source; defaults to the root-seed tree stream
        representative: Distance charged to a band, its "lower" or "upper" endpoint

    Raises:
        InputDomainError: If any datum is outside [0, R)
        ValueError: If alpha, the representative or the layer count is invalid
    """
    alpha = check_alpha(alpha)
    representative = check_representative(representative)
    if config.leaf_count < grid_size(config.n) + 1:
        raise ValueError(
            f"L={config.L} gives {config.leaf_count} leaves, the grid needs {grid_size(config.n) + 1}"
        )
    grid_idx = round_to_grid(data, config.n, config.R)
    leaves = np.bincount(grid_idx, minlength=config.leaf_count).astype(np.float64)
    flat = np.concatenate(build_layers(leaves, config.L))

    if add_noise:
        stream = stream or NoiseStream(DEFAULT_SEED).child(STREAM_TREE)
        flat = flat + sample_laplace(noise_scale(config), stream, config.node_count)

    flat.setflags(write=False)
    logger.debug(
        "built baseline counting tree n=%d L=%d nodes=%d eps=%g alpha=%g noisy=%s",
        grid_idx.size, config.L, config.node_count, config.epsilon.epsilon, alpha, add_noise,
    )
    return CountingTree(config=config, flat=flat, alpha=alpha, representative=representative, noisy=add_noise)


def interval_count(tree: CountingTree, interval: Tuple[float, float]) -> IntervalCount:
    """(Noisy) count of rounded data in the half-open interval [a, b).

    The interval is clipped to [0, R) with a warning. The top grid point R
    holds data rounded up from [R - r0/2, R) and belongs to every interval
    reaching R.
    """
    a, b = float(interval[0]), float(interval[1])
    clipped = False
    if a < 0.0 or b > tree.R:
        logger.warning("interval [%r, %r) clipped to [0, %r)", a, b, tree.R)
        a, b = max(a, 0.0), min(b, tree.R)
        clipped = True
    if a >= b:
        return IntervalCount(value=0.0, nodes=0, clipped=clipped)
    lo = math.ceil(a / tree.step)
    hi = tree.grid + 1 if b >= tree.R else math.ceil(b / tree.step)
    result = tree.range_count(lo, hi)
    return IntervalCount(value=result.value, nodes=result.nodes, clipped=clipped)


def query_baseline_l1(tree: CountingTree, y: float) -> float:
    """Band-weighted count approximation of sum_k |x_k - y|."""
    return tree.query(y)


def baseline_builder(alpha: float, representative: str = "lower") -> Callable[..., CountingTree]:
    """Per-coordinate builder for the d-dimensional wrapper."""
    alpha = check_alpha(alpha)

    def build(values: np.ndarray, R: float, budget: PrivacyBudget, add_noise: bool, stream: NoiseStream) -> CountingTree:
        n = len(values)
        config = TreeConfig(n=n, R=R, L=choose_layers(grid_size(n) + 1), epsilon=budget)
        return init_counting_tree(values, config, alpha, add_noise, stream, representative)

    return build
