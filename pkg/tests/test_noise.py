"""
Tests for seeded Laplace noise and budget bookkeeping.
"""

import math

import numpy as np
import pytest

from src.privacy.noise import (
    DEFAULT_SEED,
    STREAM_TREE,
    BudgetError,
    LaplaceScale,
    NoiseStream,
    PrivacyBudget,
    compose_budgets,
    laplace_for_sensitivity,
    sample_laplace,
    split_budget,
)


def test_stream_is_reproducible():
    """Test that the same seed and path give the same draws."""
    a = NoiseStream(7, (STREAM_TREE, 3)).open_uniform(100)
    b = NoiseStream(7, (STREAM_TREE, 3)).open_uniform(100)
    assert np.array_equal(a, b)


def test_streams_on_different_paths_differ():
    """Test that sibling paths and different seeds give different draws."""
    root = NoiseStream(7)
    a = root.child(1).open_uniform(16)
    b = root.child(2).open_uniform(16)
    c = NoiseStream(8).child(1).open_uniform(16)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_child_extends_path():
    """Test that child() appends to the derivation path."""
    stream = NoiseStream(DEFAULT_SEED, (3,)).child(0, 5)
    assert stream.path == (3, 0, 5)
    assert stream.seed == DEFAULT_SEED
    assert np.array_equal(stream.open_uniform(4), NoiseStream(DEFAULT_SEED, (3, 0, 5)).open_uniform(4))


@pytest.mark.parametrize("seed", [-1, 1 << 64])
def test_stream_rejects_bad_seed(seed):
    """Test that seeds outside the u64 range are rejected."""
    with pytest.raises(ValueError):
        NoiseStream(seed)


def test_stream_rejects_negative_path():
    """Test that negative path elements are rejected."""
    with pytest.raises(ValueError):
        NoiseStream(1, (0, -1))


def test_open_uniform_excludes_endpoints():
    """Test that uniform draws never hit 0 or 1."""
    u = NoiseStream(1).open_uniform(100_000)
    assert u.min() > 0.0
    assert u.max() < 1.0


def test_sample_laplace_shapes():
    """Test scalar and array sampling."""
    stream = NoiseStream(3)
    scale = LaplaceScale(lam=2.0)
    assert isinstance(sample_laplace(scale, stream), float)
    assert sample_laplace(scale, stream, 5).shape == (5,)
    assert sample_laplace(scale, stream, (2, 3)).shape == (2, 3)


def test_sample_laplace_moments():
    """Test that mean and variance match a zero-mean Laplace(lam)."""
    scale = LaplaceScale(lam=3.0)
    x = sample_laplace(scale, NoiseStream(11), 200_000)
    assert abs(x.mean()) < 0.05
    assert x.var() == pytest.approx(scale.variance, rel=0.03)
    assert scale.variance == 18.0


@pytest.mark.parametrize("lam", [0.0, -1.0, math.inf, math.nan])
def test_laplace_scale_validation(lam):
    """Test that non-positive or non-finite scales are rejected."""
    with pytest.raises(ValueError):
        LaplaceScale(lam=lam)


@pytest.mark.parametrize("epsilon", [0.0, -0.5, math.inf])
def test_budget_validation(epsilon):
    """Test that epsilon must be positive and finite."""
    with pytest.raises(ValueError):
        PrivacyBudget(epsilon=epsilon)


def test_budget_delta_range():
    """Test that delta must lie in [0, 1)."""
    assert PrivacyBudget(epsilon=1.0).is_pure
    assert not PrivacyBudget(epsilon=1.0, delta=1e-6).is_pure
    with pytest.raises(ValueError):
        PrivacyBudget(epsilon=1.0, delta=1.0)


def test_compose_budgets_adds_epsilons():
    """Test basic composition."""
    total = compose_budgets([PrivacyBudget(epsilon=0.25), PrivacyBudget(epsilon=0.5)])
    assert total.epsilon == 0.75
    assert total.delta == 0.0


def test_compose_budgets_errors():
    """Test that empty and approximate-DP parts are rejected."""
    with pytest.raises(BudgetError):
        compose_budgets([])
    with pytest.raises(BudgetError):
        compose_budgets([PrivacyBudget(epsilon=1.0, delta=1e-5)])


@pytest.mark.parametrize("ways", [1, 2, 3, 7, 50])
def test_split_budget_composes_back(ways):
    """Test that an equal split composes back to the total."""
    parts = split_budget(PrivacyBudget(epsilon=1.3), ways)
    assert len(parts) == ways
    assert compose_budgets(parts).epsilon == pytest.approx(1.3, abs=1e-12)


def test_split_budget_errors():
    """Test invalid split requests."""
    with pytest.raises(ValueError):
        split_budget(PrivacyBudget(epsilon=1.0), 0)
    with pytest.raises(BudgetError):
        split_budget(PrivacyBudget(epsilon=1.0, delta=1e-6), 2)


def test_laplace_for_sensitivity():
    """Test that the scale is sensitivity over epsilon."""
    assert laplace_for_sensitivity(2.0, PrivacyBudget(epsilon=0.5)).lam == 4.0
    assert laplace_for_sensitivity(22.0, PrivacyBudget(epsilon=1.0)).lam == 22.0


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
