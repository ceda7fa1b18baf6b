"""Laplace noise generation and privacy-budget accounting"""

__all__ = ["noise"]
