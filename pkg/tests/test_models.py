"""
Tests for the shared records.
"""

import pytest
from pydantic import ValidationError

from src.models import (
    RESULT_COLUMNS,
    DatasetDescriptor,
    ExperimentPlan,
    ResultRow,
    TreeConfig,
    TrialStats,
)
from src.privacy.noise import PrivacyBudget


def test_tree_config_properties():
    """Test leaf and node counts derived from L."""
    config = TreeConfig(n=5, R=2.0, L=3, epsilon=PrivacyBudget(epsilon=1.0))
    assert config.leaf_count == 4
    assert config.node_count == 7
    assert config.leaf_width == 0.5


@pytest.mark.parametrize("R", [0.0, -1.0, float("inf")])
def test_tree_config_rejects_bad_bound(R):
    """Test that R must be positive and finite."""
    with pytest.raises(ValidationError):
        TreeConfig(n=1, R=R, L=1, epsilon=PrivacyBudget(epsilon=1.0))


def test_tree_config_is_frozen():
    """Test that a config cannot be changed after construction."""
    config = TreeConfig(n=1, R=1.0, L=1, epsilon=PrivacyBudget(epsilon=1.0))
    with pytest.raises(ValidationError):
        config.L = 2


def test_csv_descriptor_needs_path():
    """Test that a CSV dataset descriptor requires a path."""
    with pytest.raises(ValidationError):
        DatasetDescriptor(generator="csv")
    assert DatasetDescriptor(generator="csv", path="x.csv").path == "x.csv"


def test_experiment_plan_defaults():
    """Test default plan values."""
    plan = ExperimentPlan(arm="faster-l1", sweep="epsilon", grid=[1.0])
    assert (plan.trials, plan.queries, plan.p, plan.alpha) == (100, 32, 2, 0.5)
    assert plan.add_noise and not plan.timing
    assert plan.dataset.generator == "uniform"


@pytest.mark.parametrize(
    "overrides",
    [
        {"arm": "kd-tree"},
        {"sweep": "R"},
        {"grid": []},
        {"grid": [float("nan")]},
        {"p": 17},
        {"alpha": 0.0},
        {"trials": 0},
        {"seed": -1},
    ],
)
def test_experiment_plan_validation(overrides):
    """Test that invalid plan fields are rejected."""
    fields = {"arm": "lp", "sweep": "p", "grid": [1.0], **overrides}
    with pytest.raises(ValidationError):
        ExperimentPlan(**fields)


def test_result_row_apply_stats():
    """Test copying statistics into a row and the degenerate-fit flag."""
    row = ResultRow(arm="lp", sweep_var="p", sweep_value=2.0, n=10, d=1, R=1.0, epsilon=1.0, alpha=0.5, p=2, trials=3)
    row.apply_stats(TrialStats(mean_abs_error=1.5, stderr=0.1, op_count=4, degenerate_fit=True))
    assert (row.mean_abs_err, row.stderr, row.op_count) == (1.5, 0.1, 4)
    assert row.flag == "degenerate-fit"
    assert list(row.to_dict()) == RESULT_COLUMNS


def test_result_columns_order():
    """Test the CSV column order."""
    assert RESULT_COLUMNS[:3] == ["arm", "sweep_var", "sweep_value"]
    assert RESULT_COLUMNS[-4:] == ["seed", "config_hash", "version", "flag"]
    assert "median_query_ns" in RESULT_COLUMNS


def test_trial_stats_serializes():
    """Test the dataclass_json round trip of TrialStats."""
    stats = TrialStats(mean_abs_error=2.0, stderr=0.5, fit_M=1.2, fit_Z=0.3)
    assert TrialStats.from_dict(stats.to_dict()) == stats


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
