"""Configuration management module"""

__all__ = ["config"]
