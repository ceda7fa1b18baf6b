"""
Shared fixtures for the test suite.
"""

import pytest

from src.config.config import LogConfig
from src.logger.logger import configure_logging


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: Monte-Carlo checks that take seconds to minutes")


@pytest.fixture(autouse=True)
def reset_logging():
    """Every test starts from the default WARNING configuration on the current stderr."""
    configure_logging(LogConfig())
    yield
