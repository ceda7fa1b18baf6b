"""
Differentially Private Distance-Sum KDE
Noisy balanced-tree data structures for l1, l2 and lp^p kernel density queries
"""

__version__ = "1.0.0"

import logging

# Package-level logger; handlers are attached by src.logger.configure_logging
logger = logging.getLogger(__name__)

__all__ = [
    "logger",
    "__version__",
]
