"""
Tests for the lp^p distance-sum tree.
"""

import numpy as np
import pytest

from src.oracle.exact import exact_lpp, exact_lpp_restricted
from src.privacy.noise import NoiseStream, compose_budgets
from src.trees.l1tree import init_tree, tree_config
from src.trees.lptree import (
    MAX_P,
    binomial_combine,
    check_exponent,
    choose_lp_layers,
    exhaustive_power_sums,
    init_lp_high_dim,
    init_lp_tree,
    lp_tree_config,
    noise_scales,
    query_lp,
)


def test_root_power_sums_example():
    """Test the root of the tree over {1, 3} with p=2: (count, sum, sum of squares)."""
    tree = init_lp_tree([1.0, 3.0], lp_tree_config(2, 4.0, 1.0, 2), 2, add_noise=False)
    assert tree.power_sums[0][0].tolist() == [2.0, 4.0, 10.0]


def test_single_point_leaf_power_sums():
    """Test that {2} with R=4, p=2 puts (1, 2, 4) in the leaf [2, 3)."""
    tree = init_lp_tree([2.0], lp_tree_config(1, 4.0, 1.0, 2, L=3), 2, add_noise=False)
    assert tree.leaf_interval(2.0) == (2.0, 3.0)
    assert tree.power_sums[-1][2].tolist() == [1.0, 2.0, 4.0]
    assert tree.power_sums[-1].sum(axis=0).tolist() == [1.0, 2.0, 4.0]


def test_two_point_query_example():
    """Test that {1, 3} with p=2 answers 2 at y=2 when both points sit outside y's leaf."""
    tree = init_lp_tree([1.0, 3.0], lp_tree_config(2, 4.0, 1.0, 2, L=4), 2, add_noise=False)
    assert tree.leaf_interval(2.0) == (2.0, 2.5)
    assert query_lp(tree, 2.0) == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize(
    "n, p, L",
    [(1, 3, 1), (2, 2, 2), (1024, 1, 11), (1024, 2, 6), (1024, 3, 5), (1000, 16, 2)],
)
def test_choose_lp_layers(n, p, L):
    """Test L = max(1, ceil(log2 n / p) + 1)."""
    assert choose_lp_layers(n, p) == L


@pytest.mark.parametrize("p", [0, 17, 2.5, True])
def test_exponent_range(p):
    """Test that p must be an integer in [1, 16]."""
    with pytest.raises(ValueError):
        check_exponent(p)
    assert check_exponent(MAX_P) == 16


@pytest.mark.parametrize("p", [1, 2, 3])
def test_noiseless_matches_restricted_oracle(p):
    """Test over 1000 random instances that a noiseless lp query equals the oracle outside y's leaf."""
    rng = np.random.default_rng(p)
    for _ in range(1000):
        n = int(rng.integers(1, 257))
        data = rng.random(n)
        tree = init_lp_tree(data, lp_tree_config(n, 1.0, 1.0, p), p, add_noise=False)
        y = float(rng.random())
        expected = exact_lpp_restricted(data, y, p, tree.leaf_interval(y))
        assert query_lp(tree, y) == pytest.approx(expected, rel=1e-9, abs=1e-9 * n)


def test_p1_agrees_with_l1_tree():
    """Test that the p=1 tree and the l1 tree give the same noiseless answers."""
    data = np.random.default_rng(3).random(100)
    config = tree_config(100, 1.0, 1.0)
    lp = init_lp_tree(data, config, 1, add_noise=False)
    l1 = init_tree(data, config, add_noise=False)
    for y in (0.05, 0.5, 0.93):
        assert lp.query(y) == pytest.approx(l1.query(y), rel=1e-12)


def test_binomial_expansion():
    """Test that combining exhaustive power sums gives the exact lp^p sum."""
    rng = np.random.default_rng(8)
    for p in range(1, 6):
        data = rng.random(40)
        y = float(rng.random())
        s_left, s_right = exhaustive_power_sums(data, y, p)
        assert binomial_combine(y, p, s_left, s_right) == pytest.approx(exact_lpp(data, y, p), rel=1e-9)


def test_noise_scales_per_power():
    """Test scale (p+1) L R^q / eps for every power q."""
    config = lp_tree_config(4, 2.0, 1.0, 2, L=3)
    scales = [s.lam for s in noise_scales(config, 2)]
    assert scales == pytest.approx([9.0, 18.0, 36.0])


def test_budget_accounting():
    """Test that the p+1 families compose back to epsilon."""
    tree = init_lp_tree([0.1, 0.7], lp_tree_config(2, 1.0, 0.9, 4), 4)
    families = tree.noise_families()
    assert len(families) == 5
    assert compose_budgets(families).epsilon == pytest.approx(0.9, abs=1e-12)


def test_query_operation_count():
    """Test that an lp query visits L - 1 siblings."""
    config = lp_tree_config(4096, 1.0, 1.0, 2)
    tree = init_lp_tree(np.linspace(0, 0.99, 4096), config, 2)
    assert tree.operation_count(0.42) == config.L - 1 == 6


def test_seeded_noise_is_reproducible():
    """Test that a fixed stream gives identical noisy power sums."""
    config = lp_tree_config(8, 1.0, 1.0, 3)
    data = np.linspace(0.05, 0.95, 8)
    a = init_lp_tree(data, config, 3, stream=NoiseStream(4))
    b = init_lp_tree(data, config, 3, stream=NoiseStream(4))
    assert all(np.array_equal(x, y) for x, y in zip(a.power_sums, b.power_sums))


def test_high_dim_lp_noiseless():
    """Test the d-dimensional lp^p structure against the per-coordinate oracle."""
    rng = np.random.default_rng(12)
    points = rng.random((120, 3))
    structure = init_lp_high_dim(points, 1.0, 1.0, 2, add_noise=False)
    y = rng.random(3)
    expected = sum(
        exact_lpp_restricted(points[:, [i]], [y[i]], 2, tree.leaf_interval(y[i]))
        for i, tree in enumerate(structure.trees)
    )
    assert structure.query(y) == pytest.approx(expected, rel=1e-9)
    assert structure.trees[0].config.epsilon.epsilon == pytest.approx(1.0 / 3)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
