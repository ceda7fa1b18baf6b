"""
Datasets: synthetic generators and CSV files, always inside [0, R)^d.

CSV files hold one point per line, d comma-separated decimal floats, '.' as
the decimal separator and no header unless ``header=True``.
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd

from ..logger.logger import get_logger
from ..models import DatasetDescriptor, InputDomainError
from ..privacy.noise import DEFAULT_SEED, STREAM_DATASET, NoiseStream

logger = get_logger("dataset")

R_MARGIN = 1e-9


@dataclass(frozen=True, eq=False)
class Dataset:
    """n x d points in [0, R)^d and where they came from."""

    points: np.ndarray
    R: float
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim != 2:
            raise InputDomainError(f"dataset points must be an (n, d) array, got shape {pts.shape}")
        if not math.isfinite(self.R) or self.R <= 0:
            raise ValueError(f"R must be positive and finite, got {self.R}")
        bad = ~np.isfinite(pts) | (pts < 0.0) | (pts >= self.R)
        if bad.any():
            row, col = (int(i) for i in np.argwhere(bad)[0])
            raise InputDomainError(f"point {row} coordinate {col} = {pts[row, col]!r} is outside [0, {self.R!r})")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def column(self, i: int) -> np.ndarray:
        return self.points[:, i]


def gen_uniform(n: int, d: int, R: float, seed: int = DEFAULT_SEED) -> Dataset:
    """i.i.d. uniform points on [0, R)^d from the dataset stream of ``seed``."""
    rng = NoiseStream(seed).child(STREAM_DATASET).rng
    pts = rng.random((n, d)) * R
    np.minimum(pts, np.nextafter(R, 0.0), out=pts)
    return Dataset(pts, float(R), {"generator": "uniform", "n": n, "d": d, "R": float(R), "seed": seed})


def gen_gaussian_clipped(n: int, d: int, mean: float, sigma: float, R: float, seed: int = DEFAULT_SEED) -> Dataset:
    """Normal(mean, sigma) draws clamped into [0, R (1 - 1e-9)]."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    rng = NoiseStream(seed).child(STREAM_DATASET).rng
    pts = np.clip(rng.normal(mean, sigma, size=(n, d)), 0.0, R * (1.0 - R_MARGIN))
    return Dataset(
        pts, float(R),
        {"generator": "gaussian", "n": n, "d": d, "mean": mean, "sigma": sigma, "R": float(R), "seed": seed},
    )


def resolve_data_path(path: Union[str, Path], data_dir: Optional[str] = None) -> Path:
    """``path`` as given if it exists, otherwise relative to ``data_dir``."""
    path = Path(path)
    if path.exists() or path.is_absolute() or not data_dir:
        return path
    candidate = Path(data_dir) / path
    return candidate if candidate.exists() else path


def _first_bad_cell(raw: np.ndarray):
    for r, row in enumerate(raw):
        for c, cell in enumerate(row):
            try:
                if math.isfinite(float(cell)):
                    continue
            except (TypeError, ValueError):
                pass
            return r, c, cell
    return None


def load_csv(
    path: Union[str, Path],
    R: Optional[float] = None,
    header: bool = False,
    shift_to_domain: bool = False,
    data_dir: Optional[str] = None,
    dim: Optional[int] = None,
) -> Dataset:
    """Read one point per row.

    Args:
        path: CSV file, looked up in ``data_dir`` when not found as given
        R: Value bound; defaults to (1 + 1e-9) * max coordinate (1.0 if that max is 0)
        header: Skip the first line
        shift_to_domain: Subtract each column's minimum instead of rejecting negatives
        data_dir: Search directory for relative paths
        dim: Dimension recorded for an empty file

    Raises:
        InputDomainError: Ragged rows, non-numeric cells or values outside [0, R),
            with the offending row (1-based file line) and column
        ValueError: Empty file without an explicit R
        OSError: If the file cannot be read
    """
    resolved = resolve_data_path(path, data_dir)
    skip = 1 if header else 0
    provenance: Dict[str, Any] = {"path": str(resolved), "header": header}

    try:
        df = pd.read_csv(resolved, header=None, skiprows=skip, dtype=str, keep_default_na=False)
    except pd.errors.EmptyDataError:
        if R is None:
            raise ValueError(f"{resolved} holds no points; an explicit R is required")
        logger.warning("%s holds no points", resolved)
        return Dataset(np.empty((0, dim or 1)), float(R), provenance)
    except pd.errors.ParserError as e:
        raise InputDomainError(f"{resolved}: ragged rows: {e}") from e

    raw = df.to_numpy(dtype=object)
    short = df.isna().to_numpy()
    if short.any():
        row = int(np.argwhere(short)[0][0])
        raise InputDomainError(f"{resolved}: row {row + 1 + skip} has fewer than {df.shape[1]} columns")

    bad = _first_bad_cell(raw)
    if bad is not None:
        row, col, cell = bad
        raise InputDomainError(
            f"{resolved}: row {row + 1 + skip} column {col + 1}: {cell!r} is not a finite decimal number"
        )
    pts = raw.astype(np.float64)

    if shift_to_domain:
        shift = pts.min(axis=0)
        pts = pts - shift
        provenance["shift"] = shift.tolist()
        logger.info("shifted %s by its column minima %s", resolved, shift.tolist())
    else:
        negative = pts < 0.0
        if negative.any():
            row, col = (int(i) for i in np.argwhere(negative)[0])
            raise InputDomainError(
                f"{resolved}: row {row + 1 + skip} column {col + 1}: negative value {pts[row, col]!r}; "
                "use --shift-to-domain to subtract column minima"
            )

    if R is None:
        top = float(pts.max()) if pts.size else 0.0
        R = top * (1.0 + R_MARGIN) if top > 0.0 else 1.0
        provenance["R_from_data"] = True
    else:
        over = pts >= R
        if over.any():
            row, col = (int(i) for i in np.argwhere(over)[0])
            raise InputDomainError(
                f"{resolved}: row {row + 1 + skip} column {col + 1}: value {pts[row, col]!r} is not below R={R!r}"
            )

    logger.debug("loaded %s: n=%d d=%d R=%r", resolved, pts.shape[0], pts.shape[1], R)
    return Dataset(pts, float(R), provenance)


def save_csv(dataset: Dataset, path: Union[str, Path]) -> Path:
    """Write with 17 significant digits, so load_csv(save_csv(ds)) reproduces every bit."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(dataset.points).to_csv(path, header=False, index=False, float_format="%.17g", lineterminator="\n")
    return path


def parse_generator_spec(spec: str) -> DatasetDescriptor:
    """Parse ``uniform:n=1000,d=2,R=1`` or ``gaussian:n=..,d=..,mean=..,sigma=..,R=..``.

    Raises:
        ValueError: Unknown generator, malformed or unknown keys
    """
    name, _, rest = spec.partition(":")
    name = name.strip()
    if name not in ("uniform", "gaussian"):
        raise ValueError(f"unknown generator {name!r}; expected 'uniform' or 'gaussian'")
    allowed = {"n", "d", "R"} | ({"mean", "sigma"} if name == "gaussian" else set())
    fields: Dict[str, Any] = {"generator": name}
    for item in filter(None, (part.strip() for part in rest.split(","))):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in allowed:
            raise ValueError(f"bad generator parameter {item!r}; allowed keys: {sorted(allowed)}")
        fields[key] = int(value) if key in ("n", "d") else float(value)
    return DatasetDescriptor(**fields)


def load_dataset(
    descriptor: DatasetDescriptor,
    seed: int = DEFAULT_SEED,
    data_dir: Optional[str] = None,
) -> Dataset:
    """Materialize a descriptor: run its generator or read its CSV file."""
    if descriptor.generator == "uniform":
        return gen_uniform(descriptor.n, descriptor.d, descriptor.R, seed)
    if descriptor.generator == "gaussian":
        return gen_gaussian_clipped(descriptor.n, descriptor.d, descriptor.mean, descriptor.sigma, descriptor.R, seed)
    return load_csv(descriptor.path, data_dir=data_dir)
