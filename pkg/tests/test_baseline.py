"""
Tests for the node-contaminated counting-tree baseline.
"""

import logging

import numpy as np
import pytest

from src.oracle.exact import exact_l1
from src.privacy.noise import NoiseStream, compose_budgets
from src.trees.baseline import (
    baseline_builder,
    canonical_nodes,
    check_alpha,
    counting_tree_config,
    geometric_regions,
    grid_size,
    init_counting_tree,
    interval_count,
    noise_scale,
    query_baseline_l1,
    round_to_grid,
)
from src.trees.multidim import init_high_dim


@pytest.fixture
def small_tree():
    """Noiseless tree over n=4 points on the grid {0, .25, .5, .75, 1}."""
    data = [0.1, 0.2, 0.5, 0.9]
    return init_counting_tree(data, counting_tree_config(4, 1.0, 1.0), 0.5, add_noise=False)


def test_grid_size():
    """Test G = max(n, 1)."""
    assert grid_size(0) == 1
    assert grid_size(5) == 5


def test_config_holds_every_grid_point():
    """Test that the leaf layer covers the G + 1 grid points."""
    config = counting_tree_config(1000, 1.0, 1.0)
    assert config.L == 11
    assert config.leaf_count >= 1001
    assert counting_tree_config(4, 1.0, 1.0).L == 4


def test_round_to_grid():
    """Test nearest-grid-point rounding."""
    assert round_to_grid([0.1, 0.2, 0.5, 0.9], 4, 1.0).tolist() == [0, 1, 2, 4]


@pytest.mark.parametrize("L", [2, 3, 4, 5])
def test_canonical_cover(L):
    """Test that the canonical nodes tile [lo, hi) exactly with at most 2(L-1) nodes."""
    leaves = 1 << (L - 1)
    for lo in range(leaves + 1):
        for hi in range(lo, leaves + 1):
            covered = []
            nodes = list(canonical_nodes(lo, hi, L))
            for layer, j in nodes:
                width = 1 << (L - 1 - layer)
                covered.extend(range(j * width, (j + 1) * width))
            assert sorted(covered) == list(range(lo, hi))
            assert len(nodes) <= 2 * (L - 1)


def test_full_range_is_the_root():
    """Test that the whole leaf range decomposes to the root."""
    assert list(canonical_nodes(0, 8, 4)) == [(0, 0)]


def test_interval_count(small_tree):
    """Test counts of rounded data in half-open intervals."""
    assert interval_count(small_tree, (0.0, 0.3)).value == 2.0
    # the top grid point R belongs to intervals reaching R
    assert interval_count(small_tree, (0.5, 1.0)).value == 2.0
    assert interval_count(small_tree, (0.6, 0.6)).value == 0.0


def test_interval_clipping_warns(small_tree, caplog):
    """Test that an interval outside [0, R) is clipped with a warning."""
    with caplog.at_level(logging.WARNING):
        result = interval_count(small_tree, (-1.0, 0.3))
    assert result.clipped
    assert result.value == 2.0
    assert "clipped" in caplog.text


def test_range_count_matches_bincount():
    """Test noiseless range counts against the rounded histogram."""
    data = np.random.default_rng(2).random(64)
    tree = init_counting_tree(data, counting_tree_config(64, 1.0, 1.0), 0.5, add_noise=False)
    histogram = np.bincount(round_to_grid(data, 64, 1.0), minlength=65)
    for lo, hi in [(0, 65), (3, 17), (10, 11), (40, 65)]:
        assert tree.range_count(lo, hi).value == histogram[lo:hi].sum()


def test_regions_tile_the_grid():
    """Test that the regions around y partition the grid indices."""
    regions = geometric_regions(0.37, 1.0, 50, 0.5)
    covered = sorted(i for r in regions.regions for i in range(r.lo, r.hi))
    assert covered == list(range(51))


def test_region_count():
    """Test the number of geometric bands: inner plus one left and one right per ratio step."""
    # r: 0.25 -> 0.5 -> 1.0 stops at R=1
    assert len(geometric_regions(0.5, 1.0, 4, 1.0)) == 5


@pytest.mark.parametrize("alpha", [0.25, 0.5, 1.0])
def test_lower_representative_bounds(alpha):
    """Test A'/(1+alpha) - n r0 <= A <= A' + n r0 with lower-endpoint charges."""
    n = 500
    data = np.random.default_rng(3).random(n)
    tree = init_counting_tree(data, counting_tree_config(n, 1.0, 1.0), alpha, add_noise=False)
    slack = n * tree.step
    for y in np.random.default_rng(4).random(25):
        exact, approx = exact_l1(data, y), query_baseline_l1(tree, y)
        assert exact / (1 + alpha) - slack - 1e-9 <= approx <= exact + slack + 1e-9


@pytest.mark.parametrize("alpha", [0.25, 0.5, 1.0])
def test_upper_representative_bounds(alpha):
    """Test A' - n r0 <= A <= (1+alpha) A' + n r0 with upper-endpoint charges."""
    n = 500
    data = np.random.default_rng(3).random(n)
    config = counting_tree_config(n, 1.0, 1.0)
    tree = init_counting_tree(data, config, alpha, add_noise=False, representative="upper")
    slack = n * tree.step
    for y in np.random.default_rng(4).random(25):
        exact, approx = exact_l1(data, y), tree.query(y)
        assert exact - slack - 1e-9 <= approx <= (1 + alpha) * exact + slack + 1e-9


def test_cached_and_uncached_answers_agree():
    """Test that query() and query_stats() give the same answer."""
    data = np.random.default_rng(5).random(200)
    tree = init_counting_tree(data, counting_tree_config(200, 1.0, 1.0), 0.5, stream=NoiseStream(1))
    for y in (0.0, 0.33, 0.999):
        value, nodes = tree.query_stats(y)
        assert tree.query(y) == value
        assert 0 < nodes <= len(tree.regions(y)) * 2 * (tree.config.L - 1)


def test_noise_scale_and_budget():
    """Test scale 2L/eps at the full budget, one noise family."""
    config = counting_tree_config(1000, 1.0, 0.5)
    assert noise_scale(config).lam == pytest.approx(44.0)
    tree = init_counting_tree([0.5], counting_tree_config(1, 1.0, 0.5), 0.5)
    assert compose_budgets(tree.noise_families()).epsilon == 0.5


def test_multidim_baseline_budget():
    """Test the d-dimensional baseline splits the budget d ways."""
    points = np.random.default_rng(6).random((30, 4))
    structure = init_high_dim(points, 1.0, 2.0, builder=baseline_builder(0.5))
    assert compose_budgets(structure.noise_families()).epsilon == pytest.approx(2.0, abs=1e-12)
    assert structure.trees[0].config.epsilon.epsilon == pytest.approx(0.5)


@pytest.mark.parametrize("alpha", [0.0, -0.5, 1.5, float("nan")])
def test_alpha_range(alpha):
    """Test that alpha must lie in (0, 1]."""
    with pytest.raises(ValueError):
        check_alpha(alpha)


def test_unknown_representative():
    """Test that only lower and upper representatives exist."""
    with pytest.raises(ValueError):
        init_counting_tree([0.5], counting_tree_config(1, 1.0, 1.0), 0.5, representative="middle")


def test_too_few_layers():
    """Test that the tree must hold every grid point."""
    with pytest.raises(ValueError):
        init_counting_tree([0.5, 0.6], counting_tree_config(8, 1.0, 1.0, L=3), 0.5)


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
