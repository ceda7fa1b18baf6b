"""Exact brute-force distance sums"""

__all__ = ["exact"]
