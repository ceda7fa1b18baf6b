"""Logging to standard error with optional file rotation"""

__all__ = ["logger"]
