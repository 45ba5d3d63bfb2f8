"""Disconnected recurrent classifier.

Each position gets a fixed-size context window instead of the unbounded
recurrence of a plain RNN: the forward half encodes the k words ending at
the position, the backward half the k words starting at it, each from a
fresh zero state. Windows are clipped at the sequence boundaries, which is
equivalent to skipping pad tokens outright; with k >= n both halves see the
whole sequence and the model reduces exactly to a bidirectional LSTM. The
per-position vectors are max-pooled over time and joined with the scaled
auxiliary features at the classifier head.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..numerics import Tensor, concat, lstm_run, masked_global_pool, row, stack_rows
from .common import (
    check_indices,
    check_mode,
    classifier_head,
    embed,
    init_head,
    init_lstm,
    probabilities,
)


@dataclass(frozen=True)
class DrnnConfig:
    window: int = 8
    hidden: int = 128        # per direction
    train_embedding: bool = False

    def __post_init__(self):
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.hidden < 1:
            raise ValueError(f"hidden must be >= 1, got {self.hidden}")


def init_params(
    config: DrnnConfig,
    rng: np.random.Generator,
    num_classes: int,
    feature_dim: int,
    embedding_matrix: np.ndarray,
) -> dict[str, Tensor]:
    d = embedding_matrix.shape[1]
    params = {"embedding": Tensor(embedding_matrix, requires_grad=config.train_embedding)}
    params.update(init_lstm(rng, config.hidden, d))
    params.update(init_head(rng, 2 * config.hidden + feature_dim, num_classes))
    return params


def drnn_logits(
    indices: Sequence[int],
    f_nlp: np.ndarray,
    params: Mapping[str, Tensor],
    config: DrnnConfig,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> Tensor:
    check_mode(mode)
    indices = check_indices(indices)
    x = embed(params, indices)
    n = x.data.shape[0]
    k, L = config.window, config.hidden
    inputs = [row(x, t) for t in range(n)]
    rows = []
    for t in range(n):
        forward = lstm_run(inputs[max(0, t - k + 1):t + 1],
                           params["lstm.fwd_W"], params["lstm.fwd_b"], L)[-1]
        backward = lstm_run(inputs[t:t + k][::-1],
                            params["lstm.bwd_W"], params["lstm.bwd_b"], L)[-1]
        rows.append(concat([forward, backward]))
    pooled = masked_global_pool(stack_rows(rows), n, "max")
    return classifier_head(params, pooled, f_nlp)


def drnn_forward(
    indices: Sequence[int],
    f_nlp: np.ndarray,
    params: Mapping[str, Tensor],
    config: DrnnConfig,
    num_classes: int,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    return probabilities(drnn_logits(indices, f_nlp, params, config, mode, rng),
                         num_classes)
