"""
Exact distance sums by brute force.

All sums use ``math.fsum`` (exactly rounded), so the result does not depend
on the order of the points. Points are an (n, d) array or a flat sequence of
n one-dimensional values; the query has d coordinates.
"""

import math
from typing import Any, Sequence, Tuple, Union

import numpy as np

from ..models import InputDomainError

Interval = Tuple[float, float]


def as_instance(points: Any, y: Any) -> Tuple[np.ndarray, np.ndarray]:
    """Return (points as (n, d), y as (d,)).

    Raises:
        InputDomainError: If the point and query dimensions differ
    """
    yv = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if yv.ndim != 1:
        raise InputDomainError(f"query must be a vector, got shape {yv.shape}")
    try:
        pts = np.asarray(points, dtype=np.float64)
    except ValueError as e:
        raise InputDomainError(f"dimension mismatch among points: {e}") from e
    if pts.size == 0:
        return pts.reshape(0, yv.size), yv
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2 or pts.shape[1] != yv.size:
        raise InputDomainError(f"points of shape {pts.shape} do not match a query of {yv.size} coordinates")
    return pts, yv


def _outside(pts: np.ndarray, excluded: Union[Interval, Sequence[Interval]]) -> np.ndarray:
    """Mask of coordinates lying outside their excluded half-open interval."""
    bounds = np.asarray(excluded, dtype=np.float64).reshape(-1, 2)
    if bounds.shape[0] == 1:
        bounds = np.repeat(bounds, pts.shape[1], axis=0)
    if bounds.shape[0] != pts.shape[1]:
        raise InputDomainError(f"{bounds.shape[0]} excluded intervals for {pts.shape[1]} coordinates")
    lo, hi = bounds[:, 0], bounds[:, 1]
    return (pts < lo) | (pts >= hi)


def _power(diff: np.ndarray, p: int) -> np.ndarray:
    out = np.ones_like(diff)
    for _ in range(p):
        out = out * diff
    return out


def check_power(p: int) -> int:
    if isinstance(p, bool) or int(p) != p or p < 1:
        raise ValueError(f"p must be a positive integer, got {p}")
    return int(p)


def exact_l1(points: Any, y: Any) -> float:
    """sum_k ||x_k - y||_1."""
    pts, yv = as_instance(points, y)
    return math.fsum(np.abs(pts - yv).ravel())


def exact_l2(points: Any, y: Any) -> float:
    """sum_k ||x_k - y||_2."""
    pts, yv = as_instance(points, y)
    if not pts.shape[0]:
        return 0.0
    return math.fsum(np.linalg.norm(pts - yv, axis=1))


def exact_lpp(points: Any, y: Any, p: int) -> float:
    """sum_k ||x_k - y||_p^p, with integer powers by repeated multiplication."""
    p = check_power(p)
    pts, yv = as_instance(points, y)
    return math.fsum(_power(np.abs(pts - yv), p).ravel())


def exact_l1_restricted(points: Any, y: Any, excluded: Union[Interval, Sequence[Interval]]) -> float:
    """exact_l1 over the coordinates outside ``excluded``.

    ``excluded`` is one half-open interval applied to every coordinate, or one
    interval per coordinate (the query's leaf in each dimension).
    """
    pts, yv = as_instance(points, y)
    diff = np.abs(pts - yv)
    return math.fsum(diff[_outside(pts, excluded)])


def exact_lpp_restricted(points: Any, y: Any, p: int, excluded: Union[Interval, Sequence[Interval]]) -> float:
    p = check_power(p)
    pts, yv = as_instance(points, y)
    diff = _power(np.abs(pts - yv), p)
    return math.fsum(diff[_outside(pts, excluded)])
