"""Gaussian l2 -> l1 embedding feeding the d-dimensional l1 structure"""

__all__ = ["l2kde"]
