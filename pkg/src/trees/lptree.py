"""
One-dimensional lp^p distance-sum tree.

Each node stores the power sums s_q = sum x^q for q = 0..p over its interval
(q = 0 is the count). By the binomial expansion

    sum_{x >= y} (x - y)^p = sum_q C(p,q) y^(p-q) (-1)^(p-q) s_right[q]
    sum_{x <  y} (y - x)^p = sum_q C(p,q) y^(p-q) (-1)^q     s_left[q]

so the same sibling walk as the l1 tree answers sum_k |x_k - y|^p.
"""

import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

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
    split_budget,
)
from .l1tree import build_layers, check_query, check_values, freeze, leaf_index, split_flat
from .multidim import HighDimTree, init_high_dim

logger = get_logger("lptree")

MAX_P = 16


def check_exponent(p: int) -> int:
    if isinstance(p, bool) or int(p) != p or not 1 <= p <= MAX_P:
        raise ValueError(f"p must be an integer in [1, {MAX_P}], got {p}")
    return int(p)


def int_powers(base: float, p: int) -> List[float]:
    """[base^0, ..., base^p] by repeated multiplication."""
    out = [1.0]
    for _ in range(p):
        out.append(out[-1] * base)
    return out


def choose_lp_layers(n: int, p: int) -> int:
    """L = max(1, ceil(log2(n) / p) + 1), computed in integers."""
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    p = check_exponent(p)
    ceil_log2 = (n - 1).bit_length()
    return max(1, -(-ceil_log2 // p) + 1)


def lp_tree_config(n: int, R: float, epsilon: float, p: int, L: Optional[int] = None) -> TreeConfig:
    if L is None:
        L = choose_lp_layers(max(n, 1), p)
    return TreeConfig(n=n, R=R, L=L, epsilon=PrivacyBudget(epsilon=epsilon))


def noise_scales(config: TreeConfig, p: int) -> List[LaplaceScale]:
    """Scale per power q: (p+1) L R^q / eps, i.e. eps/(p+1) per family with sensitivity L R^q."""
    budgets = split_budget(config.epsilon, p + 1)
    r_pow = int_powers(config.R, p)
    return [laplace_for_sensitivity(config.L * r_pow[q], budgets[q]) for q in range(p + 1)]


def binomial_combine(y: float, p: int, s_left: np.ndarray, s_right: np.ndarray) -> float:
    """sum_q C(p,q) y^(p-q) ((-1)^(p-q) s_right[q] + (-1)^q s_left[q])."""
    y_pow = int_powers(y, p)
    total = 0.0
    for q in range(p + 1):
        sign_right = -1.0 if (p - q) & 1 else 1.0
        sign_left = -1.0 if q & 1 else 1.0
        total += math.comb(p, q) * y_pow[p - q] * (sign_right * float(s_right[q]) + sign_left * float(s_left[q]))
    return total


def exhaustive_power_sums(points: Any, y: float, p: int) -> Tuple[np.ndarray, np.ndarray]:
    """(s_left, s_right) power sums over S- = {x < y} and S+ = {x >= y}, by membership."""
    x = np.asarray(points, dtype=np.float64).ravel()
    left, right = x[x < y], x[x >= y]
    s_left = np.array([math.fsum(left ** q) for q in range(p + 1)])
    s_right = np.array([math.fsum(right ** q) for q in range(p + 1)])
    return s_left, s_right


@dataclass(frozen=True)
class NoisyLpTree:
    """Per-layer arrays of (noisy) power sums; layer l has shape (2^(l-1), p+1)."""

    config: TreeConfig
    p: int
    power_sums: Tuple[np.ndarray, ...]
    noisy: bool = True

    kind = "lp"

    @property
    def node_count(self) -> int:
        return self.config.node_count

    @property
    def R(self) -> float:
        return self.config.R

    def noise_families(self) -> List[PrivacyBudget]:
        return split_budget(self.config.epsilon, self.p + 1)

    def leaf_interval(self, y: float) -> Tuple[float, float]:
        j = leaf_index(check_query(y, self.R), self.config)
        w = self.config.leaf_width
        return j * w, (j + 1) * w

    def query_stats(self, y: float) -> Tuple[float, int]:
        y = check_query(y, self.R)
        L = self.config.L
        leaf = leaf_index(y, self.config)
        s_left = np.zeros(self.p + 1)
        s_right = np.zeros(self.p + 1)
        siblings = 0
        for layer in range(2, L + 1):
            j = leaf >> (L - layer)
            sums = self.power_sums[layer - 1]
            if j & 1:
                s_left += sums[j - 1]
            else:
                s_right += sums[j + 1]
            siblings += 1
        return binomial_combine(y, self.p, s_left, s_right), siblings

    def query(self, y: float) -> float:
        return self.query_stats(y)[0]

    def operation_count(self, y: float) -> int:
        return self.query_stats(y)[1]

    def to_dict(self) -> Dict[str, Any]:
        """Layer-major flat dump with the power index innermost."""
        return {
            "kind": self.kind,
            "noisy": self.noisy,
            "p": self.p,
            "config": self.config.model_dump(),
            "power_sums": np.concatenate([layer.ravel() for layer in self.power_sums]).tolist(),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "NoisyLpTree":
        config = TreeConfig.model_validate(payload["config"])
        p = check_exponent(payload["p"])
        return cls(
            config=config,
            p=p,
            power_sums=freeze(split_flat(payload["power_sums"], config.L, width=p + 1)),
            noisy=bool(payload.get("noisy", True)),
        )


def init_lp_tree(
    data: Any,
    config: TreeConfig,
    p: int,
    add_noise: bool = True,
    stream: Optional[NoiseStream] = None,
) -> NoisyLpTree:
    """Build the lp^p tree over 1-D data in [0, R).

    Args:
        data: Values in [0, R)
        config: Tree parameters, normally with L = choose_lp_layers(n, p)
        p: Integer exponent in [1, 16]
        add_noise: False builds the exact tree
        stream: Noise source; defaults to the root-seed tree stream

    Raises:
        InputDomainError: If any datum is outside [0, R)
        ValueError: If p is out of range
    """
    p = check_exponent(p)
    values = check_values(data, config.R)
    leaves = leaf_index(values, config)

    powers = np.empty((values.size, p + 1))
    powers[:, 0] = 1.0
    for q in range(1, p + 1):
        powers[:, q] = powers[:, q - 1] * values
    leaf_sums = np.column_stack(
        [np.bincount(leaves, weights=powers[:, q], minlength=config.leaf_count) for q in range(p + 1)]
    )
    layers = build_layers(leaf_sums, config.L)

    if add_noise:
        stream = stream or NoiseStream(DEFAULT_SEED).child(STREAM_TREE)
        noise = np.column_stack(
            [sample_laplace(scale, stream, config.node_count) for scale in noise_scales(config, p)]
        )
        start = 0
        for layer in range(config.L):
            size = 1 << layer
            layers[layer] = layers[layer] + noise[start:start + size]
            start += size

    logger.debug(
        "built lp tree p=%d n=%d L=%d nodes=%d eps=%g noisy=%s",
        p, values.size, config.L, config.node_count, config.epsilon.epsilon, add_noise,
    )
    return NoisyLpTree(config=config, p=p, power_sums=freeze(layers), noisy=add_noise)


def query_lp(tree: NoisyLpTree, y: float) -> float:
    """sum_k |x_k - y|^p over points outside y's leaf, from the (noisy) tree."""
    return tree.query(y)


def lp_builder(p: int, L: Optional[int] = None) -> Callable[..., NoisyLpTree]:
    """Per-coordinate builder for the d-dimensional wrapper."""
    p = check_exponent(p)

    def build(values: np.ndarray, R: float, budget: PrivacyBudget, add_noise: bool, stream: NoiseStream) -> NoisyLpTree:
        n = len(values)
        layers = L if L is not None else choose_lp_layers(max(n, 1), p)
        config = TreeConfig(n=n, R=R, L=layers, epsilon=budget)
        return init_lp_tree(values, config, p, add_noise, stream)

    return build


def init_lp_high_dim(
    points: Any,
    R: float,
    epsilon: float,
    p: int,
    add_noise: bool = True,
    stream: Optional[NoiseStream] = None,
    L: Optional[int] = None,
) -> HighDimTree:
    """d independent lp^p trees at eps/d each; the answer is the sum over coordinates."""
    return init_high_dim(points, R, epsilon, add_noise=add_noise, stream=stream, builder=lp_builder(p, L))
