"""Shared plumbing for the three classifier architectures."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..errors import EmptyDocumentError, ShapeMismatchError
from ..numerics import Tensor, add, concat, embedding_lookup, matmul, sigmoid, softmax
from .embeddings import PAD_INDEX

MODES = ("train", "eval")


@dataclass(frozen=True)
class BilstmParams:
    """Attribute view over the four LSTM tensors expected by numerics.bilstm."""

    fwd_W: Tensor
    fwd_b: Tensor
    bwd_W: Tensor
    bwd_b: Tensor

    @classmethod
    def from_params(cls, params: Mapping[str, Tensor]) -> "BilstmParams":
        return cls(fwd_W=params["lstm.fwd_W"], fwd_b=params["lstm.fwd_b"],
                   bwd_W=params["lstm.bwd_W"], bwd_b=params["lstm.bwd_b"])


def check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def check_indices(indices: Sequence[int]) -> np.ndarray:
    """Validate and strip padding.

    Index 0 is the pad/unknown row; models skip those positions outright, so
    padded and unpadded views of the same document are processed identically.
    A document whose every token is unknown degrades to a single pad position
    (the zero embedding row) rather than erroring — only a genuinely empty
    token sequence is an error.
    """
    indices = np.asarray(indices, dtype=np.int64)
    if indices.ndim != 1 or indices.size == 0:
        raise EmptyDocumentError("cannot run a model on an empty token sequence")
    real = indices[indices != PAD_INDEX]
    if real.size == 0:
        return np.array([PAD_INDEX], dtype=np.int64)
    return real


def glorot(rng: np.random.Generator, shape: tuple[int, ...],
           fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def head_output_dim(num_classes: int) -> int:
    """Binary heads use a single logistic unit; K>=3 uses K softmax logits."""
    if num_classes < 2:
        raise ValueError(f"need at least 2 classes, got {num_classes}")
    return 1 if num_classes == 2 else num_classes


def init_head(rng: np.random.Generator, in_dim: int, num_classes: int) -> dict[str, Tensor]:
    out_dim = head_output_dim(num_classes)
    return {
        "head.W": Tensor(glorot(rng, (out_dim, in_dim), in_dim, out_dim),
                         requires_grad=True),
        "head.b": Tensor(np.zeros(out_dim), requires_grad=True),
    }


def init_lstm(rng: np.random.Generator, L: int, d: int,
              prefix: str = "lstm") -> dict[str, Tensor]:
    """Glorot-initialized gate matrices [4L, L+d] for both directions."""
    params = {}
    for direction in ("fwd", "bwd"):
        params[f"{prefix}.{direction}_W"] = Tensor(
            glorot(rng, (4 * L, L + d), L + d, 4 * L), requires_grad=True)
        params[f"{prefix}.{direction}_b"] = Tensor(np.zeros(4 * L), requires_grad=True)
    return params


def embed(params: Mapping[str, Tensor], indices: np.ndarray) -> Tensor:
    return embedding_lookup(params["embedding"], indices)


def classifier_head(params: Mapping[str, Tensor], hidden: Tensor,
                    f_nlp: np.ndarray) -> Tensor:
    """logits = W (hidden ⊕ f_nlp) + b — features enter only here."""
    f_nlp = np.asarray(f_nlp, dtype=np.float64)
    if f_nlp.ndim != 1:
        raise ShapeMismatchError(f"feature vector must be 1-D, got {f_nlp.shape}")
    z = concat([hidden, Tensor(f_nlp)])
    if z.data.shape[0] != params["head.W"].data.shape[1]:
        raise ShapeMismatchError(
            f"classifier input width {z.data.shape[0]} != head width "
            f"{params['head.W'].data.shape[1]}"
        )
    return add(matmul(params["head.W"], z), params["head.b"])


def probabilities(logits: Tensor, num_classes: int) -> np.ndarray:
    """Probability vector from head output (logistic heads expand to (1−p, p))."""
    if head_output_dim(num_classes) == 1:
        p = float(sigmoid(logits).data[0])
        return np.array([1.0 - p, p])
    return softmax(logits.data)
