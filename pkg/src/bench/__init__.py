"""Experiment harness"""

__all__ = ["harness"]
