"""Word embedding tables.

The real pipeline concatenates a 100-dimensional table with a 300-dimensional
table per word (400 columns total), loaded from word2vec-style text files.
For desk-scale experiments a deterministic hashed table of any width can be
built without external files. Row 0 is always the all-zero padding row, and
unknown tokens resolve to it at lookup time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..errors import ResourceError
from ..numerics import rng_stream

GLOVE_DIM = 100
FASTTEXT_DIM = 300
PAD_INDEX = 0
OOV_POLICIES = ("zero", "hash_ngram")


@dataclass(frozen=True)
class EmbeddingTable:
    """vocabulary word → row index into ``matrix``; row 0 is the pad row."""

    vocabulary: Mapping[str, int]
    matrix: np.ndarray

    def __post_init__(self):
        if self.matrix.ndim != 2:
            raise ValueError(f"embedding matrix must be 2-D, got {self.matrix.shape}")
        if len(self.vocabulary) != self.matrix.shape[0] - 1:
            raise ValueError(
                f"{len(self.vocabulary)} words but {self.matrix.shape[0]} rows "
                "(expected one extra pad row)"
            )
        if np.any(self.matrix[PAD_INDEX] != 0):
            raise ValueError("pad row must be all zeros")
        rows = sorted(self.vocabulary.values())
        if rows != list(range(1, len(rows) + 1)):
            raise ValueError("vocabulary rows must be exactly 1..V")

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def indices(self, tokens: Sequence[str]) -> np.ndarray:
        """Row indices for tokens; unknown words map to the pad row."""
        return np.array([self.vocabulary.get(t, PAD_INDEX) for t in tokens],
                        dtype=np.int64)


@dataclass(frozen=True)
class DualEmbedding(EmbeddingTable):
    """Concatenated 100+300 table; every row is exactly 400 wide."""

    oov_policy: str = "zero"

    def __post_init__(self):
        super().__post_init__()
        if self.matrix.shape[1] != GLOVE_DIM + FASTTEXT_DIM:
            raise ValueError(
                f"dual embedding rows must be {GLOVE_DIM + FASTTEXT_DIM} wide, "
                f"got {self.matrix.shape[1]}"
            )
        if self.oov_policy not in OOV_POLICIES:
            raise ValueError(f"unknown OOV policy {self.oov_policy!r}")


def _read_word2vec_text(path, expected_dim: int, wanted: set[str]) -> dict[str, np.ndarray]:
    """Parse `word v1 … vD` lines, keeping only wanted words.

    A leading `count dim` header line is tolerated; every retained vector must
    have exactly ``expected_dim`` components.
    """
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if lineno == 1 and len(parts) == 2:
                try:
                    int(parts[0]), int(parts[1])
                    continue  # word2vec header
                except ValueError:
                    pass
            if len(parts) < 2:
                continue
            word = parts[0]
            if word not in wanted or word in vectors:
                continue
            values = [p for p in parts[1:] if p]
            if len(values) != expected_dim:
                raise ResourceError(
                    f"{path}: line {lineno}: {len(values)}-dimensional vector, "
                    f"declared dimension is {expected_dim}"
                )
            try:
                vectors[word] = np.array(values, dtype=np.float32)
            except ValueError as exc:
                raise ResourceError(f"{path}: line {lineno}: {exc}") from exc
    return vectors


def _hash_ngram_vector(word: str, dim: int, seed: int) -> np.ndarray:
    """Deterministic vector from character n-grams (n = 3..5, with ends marked)."""
    marked = f"<{word}>"
    ngrams = [marked[i:i + n]
              for n in (3, 4, 5)
              for i in range(len(marked) - n + 1)] or [marked]
    acc = np.zeros(dim, dtype=np.float64)
    for gram in ngrams:
        acc += rng_stream(seed, "oov-ngram", gram).standard_normal(dim)
    return (acc / len(ngrams)).astype(np.float32)


def load_dual_embeddings(
    glove_path,
    fasttext_path,
    vocabulary: Sequence[str],
    oov_policy: str = "zero",
    seed: int = 0,
) -> DualEmbedding:
    """Build the concatenated [V+1, 400] table for a fixed vocabulary.

    Words missing from both files follow the OOV policy: an all-zero row, or
    a deterministic hashed character-n-gram row per table half.
    """
    if oov_policy not in OOV_POLICIES:
        raise ValueError(f"unknown OOV policy {oov_policy!r}")
    words = list(dict.fromkeys(vocabulary))
    wanted = set(words)
    glove = _read_word2vec_text(glove_path, GLOVE_DIM, wanted)
    fasttext = _read_word2vec_text(fasttext_path, FASTTEXT_DIM, wanted)
    matrix = np.zeros((len(words) + 1, GLOVE_DIM + FASTTEXT_DIM), dtype=np.float32)
    for row, word in enumerate(words, start=1):
        g = glove.get(word)
        f = fasttext.get(word)
        if g is None and f is None and oov_policy == "hash_ngram":
            g = _hash_ngram_vector(word, GLOVE_DIM, seed)
            f = _hash_ngram_vector(word, FASTTEXT_DIM, seed + 1)
        if g is not None:
            matrix[row, :GLOVE_DIM] = g
        if f is not None:
            matrix[row, GLOVE_DIM:] = f
    return DualEmbedding(
        vocabulary={w: i for i, w in enumerate(words, start=1)},
        matrix=matrix,
        oov_policy=oov_policy,
    )


def hashed_embeddings(vocabulary: Sequence[str], dim: int, seed: int) -> EmbeddingTable:
    """Deterministic per-word table for experiments without pretrained files."""
    words = list(dict.fromkeys(vocabulary))
    matrix = np.zeros((len(words) + 1, dim), dtype=np.float32)
    scale = 1.0 / np.sqrt(dim)
    for row, word in enumerate(words, start=1):
        matrix[row] = rng_stream(seed, "hashed-embedding", word).standard_normal(dim) * scale
    return EmbeddingTable(vocabulary={w: i for i, w in enumerate(words, start=1)},
                          matrix=matrix)


def build_vocabulary(token_sequences) -> list[str]:
    """First-seen ordering of unique tokens across sequences."""
    seen: dict[str, None] = {}
    for tokens in token_sequences:
        for token in tokens:
            seen.setdefault(token)
    return list(seen)
