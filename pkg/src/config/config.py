"""
Configuration management for the DP KDE toolkit.

Loads settings from an optional .env file and the process environment, and the
named benchmark plans from a YAML file.
"""

import os
from pathlib import Path
from typing import Dict, List, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator

from ..models import ExperimentPlan
from ..privacy.noise import DEFAULT_SEED

DEFAULT_PLANS_FILE = Path(__file__).parent / "plans.yaml"


class NoiseConfig(BaseModel):
    """Root seed for every noise stream."""
    seed: int = Field(default=DEFAULT_SEED, description="Root seed (u64)")

    @field_validator("seed")
    @classmethod
    def seed_u64(cls, v: int) -> int:
        if not 0 <= v < (1 << 64):
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {v}")
        return v


class DataConfig(BaseModel):
    """Dataset lookup configuration."""
    data_dir: Optional[str] = Field(default=None, description="Search directory for relative CSV paths")


class BenchConfig(BaseModel):
    """Benchmark harness configuration."""
    node_cap: int = Field(default=1 << 24, description="Largest node count a grid point may build")
    warmup_rounds: int = Field(default=3, description="Untimed query rounds before timing")
    workers: int = Field(default=1, description="Threads running trials of one grid point")
    default_plan: str = Field(default="fig2-style", description="Plan used when bench gets no --plan")

    @field_validator("node_cap", "workers")
    @classmethod
    def positive(cls, v: int) -> int:
        if v <= 0:
            raise ValueError("value must be positive")
        return v

    @field_validator("warmup_rounds")
    @classmethod
    def at_least_three(cls, v: int) -> int:
        if v < 3:
            raise ValueError("at least 3 warmup rounds are required")
        return v


class LogConfig(BaseModel):
    """Logging configuration."""
    level: str = Field(default="WARNING", description="Log level (DEBUG, INFO, WARNING, ERROR)")
    file_path: Optional[str] = Field(default=None, description="Log file path; unset disables file logging")
    max_file_size: int = Field(default=100, description="Max log file size in MB")
    backup_count: int = Field(default=10, description="Number of backup log files to keep")

    @field_validator("level")
    @classmethod
    def level_valid(cls, v: str) -> str:
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR"]
        if v.upper() not in valid_levels:
            raise ValueError(f"Log level must be one of {valid_levels}")
        return v.upper()


class SystemConfig(BaseModel):
    """System-wide configuration."""
    noise: NoiseConfig
    data: DataConfig
    bench: BenchConfig
    log: LogConfig


class ConfigManager:
    """Manages configuration from .env, the environment and the plans file."""

    def __init__(self, env_file: str = ".env", plans_file: Optional[str] = None):
        """Initialize configuration manager.

        Args:
            env_file: Path to .env configuration file
            plans_file: Path to the YAML file of named experiment plans
        """
        self.env_file = Path(env_file)
        self.plans_file = Path(plans_file) if plans_file else DEFAULT_PLANS_FILE
        self.config: Optional[SystemConfig] = None
        self.plans: Dict[str, List[ExperimentPlan]] = {}

    def load(self) -> SystemConfig:
        """Load configuration from the .env file (if present) and the environment.

        Returns:
            Parsed SystemConfig object

        Raises:
            ValueError: If a value is malformed or fails validation
        """
        if self.env_file.exists():
            load_dotenv(self.env_file)

        try:
            self.config = SystemConfig(
                noise=NoiseConfig(seed=int(self._get_env("DP_KDE_SEED", default=str(DEFAULT_SEED)), 0)),
                data=DataConfig(data_dir=self._get_env("DP_KDE_DATA_DIR") or None),
                bench=BenchConfig(
                    node_cap=int(self._get_env("DP_KDE_NODE_CAP", default=str(1 << 24))),
                    warmup_rounds=int(self._get_env("DP_KDE_WARMUP_ROUNDS", default="3")),
                    workers=int(self._get_env("DP_KDE_WORKERS", default="1")),
                    default_plan=self._get_env("DP_KDE_DEFAULT_PLAN", default="fig2-style"),
                ),
                log=LogConfig(
                    level=self._get_env("LOG_LEVEL", default="WARNING"),
                    file_path=self._get_env("LOG_FILE") or None,
                    max_file_size=int(self._get_env("LOG_MAX_SIZE", default="100")),
                    backup_count=int(self._get_env("LOG_BACKUP_COUNT", default="10")),
                ),
            )
        except ValidationError as e:
            raise ValueError(f"Invalid configuration: {e}") from e

        self.plans = load_plans(self.plans_file)
        return self.config

    def get(self) -> SystemConfig:
        """Get current configuration.

        Raises:
            RuntimeError: If configuration not loaded
        """
        if not self.config:
            raise RuntimeError("Configuration not loaded. Call load() first.")
        return self.config

    def get_plans(self) -> Dict[str, List[ExperimentPlan]]:
        """All named plans, keyed by name."""
        return dict(self.plans)

    def get_plan(self, name: str) -> List[ExperimentPlan]:
        """Look up a named plan.

        Raises:
            KeyError: If the plan is unknown; the message lists the available names
        """
        if name not in self.plans:
            available = ", ".join(sorted(self.plans)) or "(none)"
            raise KeyError(f"Unknown plan '{name}'. Available plans: {available}")
        return self.plans[name]

    @staticmethod
    def _get_env(key: str, default: Optional[str] = None) -> str:
        """Environment value; unset and empty both fall back to ``default``."""
        return os.getenv(key) or default or ""


def load_plans(path: Path) -> Dict[str, List[ExperimentPlan]]:
    """Read a plans YAML document: ``plans: {name: [plan, ...]}``.

    A plan entry may be a single mapping or a list of mappings; every entry is
    validated as an ExperimentPlan whose ``name`` defaults to the key.

    Raises:
        ValueError: If the document is malformed or a plan fails validation
    """
    path = Path(path)
    if not path.exists():
        return {}
    try:
        with open(path, "r", encoding="utf-8") as f:
            document = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ValueError(f"Invalid plans file {path}: {e}") from e

    raw = document.get("plans", {}) if isinstance(document, dict) else None
    if not isinstance(raw, dict):
        raise ValueError(f"Invalid plans file {path}: expected a 'plans' mapping")

    plans: Dict[str, List[ExperimentPlan]] = {}
    for name, entries in raw.items():
        if isinstance(entries, dict):
            entries = [entries]
        try:
            plans[name] = [ExperimentPlan(**{"name": name, **entry}) for entry in entries]
        except (TypeError, ValidationError) as e:
            raise ValueError(f"Invalid plan '{name}' in {path}: {e}") from e
    return plans

