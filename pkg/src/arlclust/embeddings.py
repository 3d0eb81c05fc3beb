"""Pretrained embedding ingestion and parameter checkpointing.

Embedding files use the textual word2vec format: a header line
"<count> <dim>", then one line per word, "<token> v1 ... vK",
space-separated. Checkpoints are numpy .npz archives carrying a format
version, E, C, a vocabulary hash, and a JSON config snapshot.
"""
from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np

from .corpus import Vocabulary
from .model import ModelParams

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


def load_word2vec_text(path, vocabulary: Vocabulary, dim: int,
                       base: Optional[np.ndarray] = None) -> tuple[np.ndarray, int]:
    """Build a (dim, |V|) embedding matrix from a word2vec text file.

    Columns for vocabulary tokens found in the file are taken from it;
    misses keep the `base` initialization (zeros if none given). A header
    dimension different from `dim` is fatal.

    Returns (E, number of vocabulary tokens matched).
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"embedding file {path} is empty")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError(f"embedding file {path}: malformed header {lines[0]!r}")
    count, file_dim = int(header[0]), int(header[1])
    if file_dim != dim:
        raise ValueError(
            f"embedding file {path} has dimension {file_dim}, expected {dim}"
        )
    if count != len(lines) - 1:
        logger.warning(
            "embedding file %s: header promises %d vectors, found %d",
            path, count, len(lines) - 1,
        )
    E = np.zeros((dim, len(vocabulary))) if base is None else np.array(base, dtype=np.float64)
    if E.shape != (dim, len(vocabulary)):
        raise ValueError(f"base shape {E.shape} != ({dim}, {len(vocabulary)})")
    n_matched = 0
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.rstrip().split(" ")
        token, values = parts[0], parts[1:]
        if len(values) != dim:
            raise ValueError(
                f"embedding file {path} line {lineno}: {len(values)} values, expected {dim}"
            )
        col = vocabulary.index.get(token)
        if col is not None:
            E[:, col] = np.array(values, dtype=np.float64)
            n_matched += 1
    return E, n_matched


def vocabulary_hash(vocabulary: Vocabulary) -> str:
    return hashlib.sha256("\n".join(vocabulary.tokens).encode("utf-8")).hexdigest()


def save_checkpoint(path, params: ModelParams, vocabulary: Vocabulary,
                    config_snapshot: dict) -> None:
    """Versioned dump of E, C, the vocabulary hash, and the config."""
    np.savez(
        path,
        version=np.int64(CHECKPOINT_VERSION),
        E=params.E,
        C=params.C,
        vocab_sha256=np.str_(vocabulary_hash(vocabulary)),
        config_json=np.str_(json.dumps(config_snapshot, sort_keys=True)),
    )


def load_checkpoint(path, vocabulary: Optional[Vocabulary] = None) -> tuple[ModelParams, dict]:
    """Load a checkpoint; if a vocabulary is given, its hash must match."""
    with np.load(path) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"checkpoint {path}: unsupported version {version}")
        stored_hash = str(data["vocab_sha256"])
        if vocabulary is not None and vocabulary_hash(vocabulary) != stored_hash:
            raise ValueError(
                f"checkpoint {path} was written for a different vocabulary"
            )
        params = ModelParams(data["E"], data["C"])
        config = json.loads(str(data["config_json"]))
    return params, config
