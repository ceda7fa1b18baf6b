"""Noisy balanced binary trees answering distance-sum queries"""

__all__ = ["l1tree", "lptree", "multidim", "baseline", "codec"]
