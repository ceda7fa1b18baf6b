"""Synthetic generators and CSV ingestion"""

__all__ = ["dataset"]
