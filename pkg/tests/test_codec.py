"""
Tests for structure files.
"""

import json

import numpy as np
import pytest

from src.embedding.l2kde import init_l2
from src.privacy.noise import NoiseStream
from src.trees.baseline import baseline_builder, counting_tree_config, init_counting_tree
from src.trees.codec import FORMAT_NAME, FORMAT_VERSION, dumps, load_structure, loads, save_structure
from src.trees.l1tree import init_tree, tree_config
from src.trees.lptree import init_lp_high_dim, init_lp_tree, lp_tree_config
from src.trees.multidim import init_high_dim

POINTS = np.random.default_rng(40).random((40, 2))
STREAM = NoiseStream(123)


def build(kind):
    column = POINTS[:, 0]
    if kind == "l1":
        return init_tree(column, tree_config(40, 1.0, 1.0), stream=STREAM.child(0))
    if kind == "lp":
        return init_lp_tree(column, lp_tree_config(40, 1.0, 1.0, 3), 3, stream=STREAM.child(1))
    if kind == "baseline":
        return init_counting_tree(column, counting_tree_config(40, 1.0, 1.0), 0.5, stream=STREAM.child(2))
    if kind == "multidim":
        return init_high_dim(POINTS, 1.0, 1.0, stream=STREAM.child(3))
    if kind == "multidim-lp":
        return init_lp_high_dim(POINTS, 1.0, 1.0, 2, stream=STREAM.child(4))
    if kind == "multidim-baseline":
        return init_high_dim(POINTS, 1.0, 1.0, stream=STREAM.child(5), builder=baseline_builder(0.25))
    return init_l2(POINTS, 1.5, 1.0, 0.5, stream=STREAM.child(6))


def sample_queries(structure):
    if structure.kind in ("l1", "lp", "baseline"):
        return [0.0, 0.31, 0.77]
    return [[0.0, 0.0], [0.31, 0.52], [0.77, 0.1]]


@pytest.mark.parametrize("kind", ["l1", "lp", "baseline", "multidim", "multidim-lp", "multidim-baseline", "l2"])
def test_saved_structure_answers_identically(kind, tmp_path):
    """Test that a loaded structure answers bit-identically to the saved one."""
    structure = build(kind)
    path = save_structure(structure, tmp_path / "nested" / f"{kind}.json")
    loaded = load_structure(path)
    assert type(loaded) is type(structure)
    for y in sample_queries(structure):
        assert loaded.query(y) == structure.query(y)


def test_envelope():
    """Test the format name and version around the payload."""
    document = json.loads(dumps(build("l1")))
    assert document["format"] == FORMAT_NAME
    assert document["version"] == FORMAT_VERSION
    assert document["structure"]["kind"] == "l1"
    assert "seed" not in document["structure"]


def test_l2_file_stores_embedding_seed_not_matrix():
    """Test that the l2 file carries the embedding parameters only."""
    structure = build("l2")
    embedding = json.loads(dumps(structure))["structure"]["embedding"]
    assert embedding["seed"] == structure.embedding.seed
    assert embedding["k"] == structure.embedding.k
    assert "matrix" not in embedding


def test_l2_tampered_dimension():
    """Test that an embedding whose k disagrees with its parameters is rejected."""
    document = json.loads(dumps(build("l2")))
    document["structure"]["embedding"]["k"] += 1
    with pytest.raises(ValueError):
        loads(json.dumps(document))


@pytest.mark.parametrize(
    "text",
    [
        "not json",
        json.dumps([1, 2]),
        json.dumps({"format": "other", "version": 1, "structure": {}}),
        json.dumps({"format": FORMAT_NAME, "version": 99, "structure": {}}),
        json.dumps({"format": FORMAT_NAME, "version": FORMAT_VERSION, "structure": {"kind": "kd-tree"}}),
        json.dumps({"format": FORMAT_NAME, "version": FORMAT_VERSION, "structure": {"kind": "l1"}}),
    ],
)
def test_malformed_files(text):
    """Test that malformed structure files raise ValueError."""
    with pytest.raises(ValueError):
        loads(text)


def test_truncated_node_array():
    """Test that a node array of the wrong length is rejected."""
    document = json.loads(dumps(build("l1")))
    document["structure"]["counts"].pop()
    with pytest.raises(ValueError):
        loads(json.dumps(document))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
