"""Test suite for the DP distance-sum KDE toolkit"""

__all__ = []
