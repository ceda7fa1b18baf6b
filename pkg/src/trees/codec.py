"""
JSON structure files.

A file is an envelope ``{"format": "dp-kde-structure", "version": 1,
"structure": {...}}`` around the structure's own ``to_dict()`` payload.
Floats are written by ``json`` with their shortest round-trip repr, so a
loaded structure answers bit-identically to the one that was saved.
"""

import json
from pathlib import Path
from typing import Any, Dict, Union

from ..embedding.l2kde import L2KdeStructure
from ..logger.logger import get_logger
from .baseline import CountingTree
from .l1tree import NoisyL1Tree
from .lptree import NoisyLpTree
from .multidim import HighDimTree

logger = get_logger("codec")

FORMAT_NAME = "dp-kde-structure"
FORMAT_VERSION = 1

Structure = Union[NoisyL1Tree, NoisyLpTree, CountingTree, HighDimTree, L2KdeStructure]


def structure_from_payload(payload: Dict[str, Any]) -> Structure:
    """Rebuild a structure from its ``to_dict()`` form, dispatching on ``kind``."""
    kind = payload.get("kind")
    if kind == NoisyL1Tree.kind:
        return NoisyL1Tree.from_dict(payload)
    if kind == NoisyLpTree.kind:
        return NoisyLpTree.from_dict(payload)
    if kind == CountingTree.kind:
        return CountingTree.from_dict(payload)
    if kind == HighDimTree.kind:
        return HighDimTree.from_dict(payload, structure_from_payload)
    if kind == L2KdeStructure.kind:
        return L2KdeStructure.from_dict(payload, structure_from_payload)
    raise ValueError(f"unknown structure kind {kind!r}")


def dumps(structure: Structure) -> str:
    return json.dumps(
        {"format": FORMAT_NAME, "version": FORMAT_VERSION, "structure": structure.to_dict()},
        allow_nan=False,
    )


def loads(text: str) -> Structure:
    """Parse a structure file's text.

    Raises:
        ValueError: If the text is not a structure file of a supported version
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"not a structure file: {e}") from e
    if not isinstance(document, dict) or document.get("format") != FORMAT_NAME:
        raise ValueError(f"not a structure file: missing format '{FORMAT_NAME}'")
    if document.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported structure file version {document.get('version')!r}")
    try:
        return structure_from_payload(document["structure"])
    except (KeyError, TypeError) as e:
        raise ValueError(f"malformed structure file: {e!r}") from e


def save_structure(structure: Structure, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(structure), encoding="utf-8")
    logger.info("saved %s structure to %s", structure.kind, path)
    return path


def load_structure(path: Union[str, Path]) -> Structure:
    path = Path(path)
    structure = loads(path.read_text(encoding="utf-8"))
    logger.debug("loaded %s structure from %s", structure.kind, path)
    return structure
