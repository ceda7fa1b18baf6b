#!/usr/bin/env python3
"""
DP KDE - launcher

Runs the command-line tool from the project root; settings come from flags,
the environment and an optional .env file (see README).
"""

import sys
from pathlib import Path

# Add project root to path
PROJECT_ROOT = Path(__file__).parent
sys.path.insert(0, str(PROJECT_ROOT))

from src.main import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
