"""Pooled bidirectional LSTM classifier.

A full-sequence BiLSTM is summarized three ways — the output row at the last
token, the masked max over time, and the masked mean over time — and the
concatenation of those summaries with the scaled auxiliary features feeds
the classifier head.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..numerics import Tensor, bilstm, concat, masked_global_pool, row, spatial_dropout
from .common import (
    BilstmParams,
    check_indices,
    check_mode,
    classifier_head,
    embed,
    init_head,
    init_lstm,
    probabilities,
)


@dataclass(frozen=True)
class PooledBilstmConfig:
    hidden: int = 256        # per direction
    dropout: float = 0.3
    train_embedding: bool = False

    def __post_init__(self):
        if self.hidden < 1:
            raise ValueError(f"hidden must be >= 1, got {self.hidden}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")


def init_params(
    config: PooledBilstmConfig,
    rng: np.random.Generator,
    num_classes: int,
    feature_dim: int,
    embedding_matrix: np.ndarray,
) -> dict[str, Tensor]:
    d = embedding_matrix.shape[1]
    params = {"embedding": Tensor(embedding_matrix, requires_grad=config.train_embedding)}
    params.update(init_lstm(rng, config.hidden, d))
    params.update(init_head(rng, 6 * config.hidden + feature_dim, num_classes))
    return params


def pooled_bilstm_logits(
    indices: Sequence[int],
    f_nlp: np.ndarray,
    params: Mapping[str, Tensor],
    config: PooledBilstmConfig,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> Tensor:
    check_mode(mode)
    indices = check_indices(indices)
    x = embed(params, indices)
    x = spatial_dropout(x, config.dropout, mode, rng)
    n = x.data.shape[0]
    H = bilstm(x, BilstmParams.from_params(params), config.hidden)
    h_n = row(H, n - 1)
    c_max = masked_global_pool(H, n, "max")
    c_mean = masked_global_pool(H, n, "mean")
    return classifier_head(params, concat([h_n, c_max, c_mean]), f_nlp)


def pooled_bilstm_forward(
    indices: Sequence[int],
    f_nlp: np.ndarray,
    params: Mapping[str, Tensor],
    config: PooledBilstmConfig,
    num_classes: int,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    return probabilities(
        pooled_bilstm_logits(indices, f_nlp, params, config, mode, rng), num_classes
    )
