"""
l2 distance sums through a Gaussian l2 -> l1 embedding.

T(x)_i = (1 / (beta * k)) * sum_j Z_ij x_j with Z_ij standard normal and
beta = sqrt(2/pi) keeps ||T(x)||_1 within (1 +- alpha) ||x||_2 with high
probability once k = ceil(8 (ln n + 5) / alpha^2). The embedded dataset is
shifted into [0, R') and handed to the d-dimensional l1 structure with k
coordinates; a query embeds y with the same matrix, shifts it and clamps it
into the same box.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple

import numpy as np

from ..logger.logger import get_logger
from ..models import InputDomainError
from ..privacy.noise import DEFAULT_SEED, STREAM_EMBEDDING, STREAM_TREE, NoiseStream, PrivacyBudget
from ..trees.multidim import HighDimTree, as_point_matrix, as_query_vector, init_high_dim, l1_builder

logger = get_logger("l2kde")

BETA = math.sqrt(2.0 / math.pi)
RANGE_SLACK = 1e-6

RangeMode = Literal["data", "public"]


def target_dimension(n: int, alpha: float) -> int:
    """k = ceil(8 (ln n + 5) / alpha^2)."""
    return int(math.ceil(8.0 * (math.log(n) + 5.0) / (alpha * alpha)))


@dataclass(frozen=True)
class EmbeddingSpec:
    """Gaussian embedding matrix and the parameters that regenerate it."""

    d_in: int
    k: int
    alpha: float
    n: int
    seed: int
    matrix: np.ndarray = field(repr=False, compare=False)

    @property
    def beta(self) -> float:
        return BETA

    def to_dict(self) -> Dict[str, Any]:
        return {"d_in": self.d_in, "k": self.k, "alpha": self.alpha, "n": self.n, "seed": self.seed}


def make_embedding(d_in: int, alpha: float, n: int, seed: int = DEFAULT_SEED) -> EmbeddingSpec:
    """Draw the k x d_in standard normal matrix from ``seed``.

    Raises:
        ValueError: If alpha is outside (0, 1), or n or d_in is below 1
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if d_in < 1:
        raise ValueError(f"d_in must be a positive integer, got {d_in}")
    k = target_dimension(n, alpha)
    matrix = NoiseStream(seed).rng.standard_normal((k, d_in))
    matrix.setflags(write=False)
    return EmbeddingSpec(d_in=d_in, k=k, alpha=float(alpha), n=int(n), seed=int(seed), matrix=matrix)


def embed(spec: EmbeddingSpec, x: Any) -> np.ndarray:
    """T(x) for one d_in-vector, or row-wise for an (m, d_in) array.

    Raises:
        InputDomainError: On a dimension mismatch
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape[-1:] != (spec.d_in,) or arr.ndim > 2:
        raise InputDomainError(f"expected vectors of {spec.d_in} coordinates, got shape {arr.shape}")
    scale = 1.0 / (spec.beta * spec.k)
    if arr.ndim == 1:
        return (spec.matrix @ arr) * scale
    return (arr @ spec.matrix.T) * scale


def check_l2_domain(points: np.ndarray, R: float, what: str = "point") -> None:
    if not np.isfinite(points).all():
        raise InputDomainError(f"{what}s must be finite")
    norms = np.linalg.norm(points, axis=-1)
    bad = np.atleast_1d(norms >= R)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise InputDomainError(f"{what} {k} has l2 norm {float(np.atleast_1d(norms)[k])!r} >= R={R!r}")


def public_range(spec: EmbeddingSpec, R: float) -> Tuple[float, float]:
    """(shift, R') from the matrix alone: |T(x)_i| < ||Z_i||_2 R / (beta k) whenever ||x||_2 < R."""
    bound = float(np.linalg.norm(spec.matrix, axis=1).max()) * R / (spec.beta * spec.k)
    if bound <= 0.0:
        return 0.0, 1.0
    return bound, 2.0 * bound * (1.0 + RANGE_SLACK)


def data_range(embedded: np.ndarray) -> Tuple[float, float]:
    """(shift, R') from the embedded data: shift = -min, R' = span * (1 + slack), or 1 when the span is 0."""
    if embedded.size == 0:
        return 0.0, 1.0
    lo, hi = float(embedded.min()), float(embedded.max())
    span = hi - lo
    return -lo, (span * (1.0 + RANGE_SLACK) if span > 0.0 else 1.0)


@dataclass(frozen=True)
class L2KdeStructure:
    """Embedding, common shift, coordinate bound R' and the inner k-dimensional l1 structure."""

    R: float
    embedding: EmbeddingSpec
    shift: float
    R_prime: float
    inner: HighDimTree
    range_mode: str = "data"

    kind = "l2"

    @property
    def dim(self) -> int:
        return self.embedding.d_in

    @property
    def node_count(self) -> int:
        return self.inner.node_count

    def noise_families(self) -> List[PrivacyBudget]:
        return self.inner.noise_families()

    def embedded_query(self, y: Any) -> Tuple[np.ndarray, int]:
        """Shifted T(y) clamped into [0, R'), plus the number of clamped coordinates."""
        vec = as_query_vector(y, self.dim)
        check_l2_domain(vec, self.R, what="query")
        coords = embed(self.embedding, vec) + self.shift
        clamped = np.clip(coords, 0.0, np.nextafter(self.R_prime, 0.0))
        moved = int(np.count_nonzero(clamped != coords))
        if moved:
            logger.debug("clamped %d of %d embedded query coordinates into [0, %g)", moved, coords.size, self.R_prime)
        return clamped, moved

    def query_stats(self, y: Any) -> Tuple[float, int]:
        coords, _ = self.embedded_query(y)
        return self.inner.query_stats(coords)

    def query(self, y: Any) -> float:
        return self.query_stats(y)[0]

    def operation_count(self, y: Any) -> int:
        return self.query_stats(y)[1]

    def to_dict(self) -> Dict[str, Any]:
        """Embedding parameters only; the matrix is regenerated from its seed on load."""
        return {
            "kind": self.kind,
            "R": self.R,
            "embedding": self.embedding.to_dict(),
            "shift": self.shift,
            "R_prime": self.R_prime,
            "range_mode": self.range_mode,
            "inner": self.inner.to_dict(),
        }

    @classmethod
    def from_dict(cls, payload: Dict[str, Any], load_child: Callable[[Dict[str, Any]], Any]) -> "L2KdeStructure":
        emb = payload["embedding"]
        spec = make_embedding(int(emb["d_in"]), float(emb["alpha"]), int(emb["n"]), int(emb["seed"]))
        if spec.k != int(emb["k"]):
            raise ValueError(f"stored embedding has k={emb['k']}, parameters give k={spec.k}")
        inner = load_child(payload["inner"])
        if not isinstance(inner, HighDimTree) or inner.dim != spec.k:
            raise ValueError("inner structure does not match the embedding dimension")
        return cls(
            R=float(payload["R"]),
            embedding=spec,
            shift=float(payload["shift"]),
            R_prime=float(payload["R_prime"]),
            inner=inner,
            range_mode=payload.get("range_mode", "data"),
        )


def init_l2(
    points: Any,
    R: float,
    epsilon: float,
    alpha: float,
    add_noise: bool = True,
    stream: Optional[NoiseStream] = None,
    embedding_seed: Optional[int] = None,
    range_mode: RangeMode = "data",
    L: Optional[int] = None,
) -> L2KdeStructure:
    """Embed the points and build the k-dimensional l1 structure at budget epsilon.

    Args:
        points: (n, d) array; every point has l2 norm below R
        R: l2 bound on the points (and on queries)
        epsilon: Total budget, split over the k embedded coordinates
        alpha: Target distortion in (0, 1)
        add_noise: False builds an exact inner structure
        stream: Parent stream; the tree noise uses ``stream.child(STREAM_TREE)``
        embedding_seed: Matrix seed; drawn from ``stream.child(STREAM_EMBEDDING)`` if omitted
        range_mode: "data" shifts by the embedded minimum; "public" uses a bound
            computed from the matrix and R only
        L: Layer override for the inner trees

    Raises:
        InputDomainError: On ragged points, non-finite values or norms >= R
    """
    if not math.isfinite(R) or R <= 0:
        raise ValueError(f"R must be positive and finite, got {R}")
    if range_mode not in ("data", "public"):
        raise ValueError(f"range_mode must be 'data' or 'public', got {range_mode!r}")
    pts = as_point_matrix(points)
    n, d = pts.shape
    check_l2_domain(pts, R)

    stream = stream or NoiseStream(DEFAULT_SEED)
    if embedding_seed is None:
        embedding_seed = int(stream.child(STREAM_EMBEDDING).rng.integers(0, (1 << 63) - 1))
    spec = make_embedding(d, alpha, max(n, 1), embedding_seed)

    embedded = embed(spec, pts) if n else np.empty((0, spec.k))
    shift, R_prime = data_range(embedded) if range_mode == "data" else public_range(spec, R)
    shifted = embedded + shift
    # the extreme coordinate may round one ulp past R' after shifting
    np.clip(shifted, 0.0, np.nextafter(R_prime, 0.0), out=shifted)

    inner = init_high_dim(
        shifted, R_prime, epsilon, add_noise=add_noise, stream=stream.child(STREAM_TREE),
        builder=l1_builder(L), dim=spec.k,
    )
    logger.debug("built l2 structure n=%d d=%d k=%d R'=%g eps=%g mode=%s", n, d, spec.k, R_prime, epsilon, range_mode)
    return L2KdeStructure(R=float(R), embedding=spec, shift=shift, R_prime=R_prime, inner=inner, range_mode=range_mode)


def query_l2(structure: L2KdeStructure, y: Any) -> float:
    """Approximate sum_x ||x - y||_2 through the embedded l1 structure."""
    return structure.query(y)
