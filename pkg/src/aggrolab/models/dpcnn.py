"""Deep pyramid CNN classifier.

A linear region-embedding convolution lifts token embeddings to a fixed
channel width, a first residual block of two pre-activated convolutions
follows, then repeated {stride-2 max-pool, two pre-activated convolutions,
identity shortcut} blocks halve the sequence while keeping the width
constant. A global max over the surviving positions feeds the classifier
head together with the scaled auxiliary features.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..numerics import (
    Tensor,
    add,
    conv1d_preact,
    masked_global_pool,
    maxpool1d_stride2,
    scale,
    spatial_dropout,
    sumsq,
)
from .common import (
    check_indices,
    check_mode,
    classifier_head,
    embed,
    glorot,
    init_head,
    probabilities,
)


@dataclass(frozen=True)
class DpcnnConfig:
    filters: int = 128
    kernel: int = 3
    region_dim: int = 128
    blocks: int = 6          # pooled residual blocks after the first block
    l2: float = 1e-5
    dropout: float = 0.3
    train_embedding: bool = False

    def __post_init__(self):
        if self.region_dim != self.filters:
            raise ValueError("identity shortcuts require region_dim == filters")
        if self.kernel < 1 or self.filters < 1 or self.blocks < 0:
            raise ValueError("kernel, filters must be >= 1 and blocks >= 0")

    @property
    def conv_layers(self) -> int:
        """1 region conv + 2 first-block convs + 2 per pooled block."""
        return 1 + 2 + 2 * self.blocks


def _conv_names(config: DpcnnConfig):
    """(prefix, has_slope) for every convolution, in forward order."""
    yield "region", False
    for block in range(config.blocks + 1):  # block 0 has no preceding pool
        for conv in (1, 2):
            yield f"block{block}.conv{conv}", True


def init_params(
    config: DpcnnConfig,
    rng: np.random.Generator,
    num_classes: int,
    feature_dim: int,
    embedding_matrix: np.ndarray,
) -> dict[str, Tensor]:
    d = embedding_matrix.shape[1]
    params = {"embedding": Tensor(embedding_matrix, requires_grad=config.train_embedding)}
    for prefix, has_slope in _conv_names(config):
        c_in = d if prefix == "region" else config.filters
        shape = (config.kernel, c_in, config.filters)
        fan_in, fan_out = config.kernel * c_in, config.kernel * config.filters
        params[f"{prefix}.W"] = Tensor(glorot(rng, shape, fan_in, fan_out),
                                       requires_grad=True)
        params[f"{prefix}.b"] = Tensor(np.zeros(config.filters), requires_grad=True)
        if has_slope:
            params[f"{prefix}.slope"] = Tensor(np.full(c_in, 0.25), requires_grad=True)
    params.update(init_head(rng, config.filters + feature_dim, num_classes))
    return params


def _residual_pair(params: Mapping[str, Tensor], z: Tensor, block: int) -> Tensor:
    h = conv1d_preact(z, params[f"block{block}.conv1.W"],
                      params[f"block{block}.conv1.b"],
                      params[f"block{block}.conv1.slope"])
    h = conv1d_preact(h, params[f"block{block}.conv2.W"],
                      params[f"block{block}.conv2.b"],
                      params[f"block{block}.conv2.slope"])
    return add(z, h)


def dpcnn_logits(
    indices: Sequence[int],
    f_nlp: np.ndarray,
    params: Mapping[str, Tensor],
    config: DpcnnConfig,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> Tensor:
    check_mode(mode)
    indices = check_indices(indices)
    x = embed(params, indices)
    x = spatial_dropout(x, config.dropout, mode, rng)
    # Region embedding: linear convolution, no pre-activation.
    z = conv1d_preact(x, params["region.W"], params["region.b"], None)
    z = _residual_pair(params, z, 0)
    for block in range(1, config.blocks + 1):
        z = maxpool1d_stride2(z)
        z = _residual_pair(params, z, block)
    pooled = masked_global_pool(z, z.data.shape[0], "max")
    return classifier_head(params, pooled, f_nlp)


def dpcnn_forward(
    indices: Sequence[int],
    f_nlp: np.ndarray,
    params: Mapping[str, Tensor],
    config: DpcnnConfig,
    num_classes: int,
    mode: str = "eval",
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    return probabilities(dpcnn_logits(indices, f_nlp, params, config, mode, rng),
                         num_classes)


def regularization(params: Mapping[str, Tensor], config: DpcnnConfig) -> Tensor:
    """L2 penalty over convolution kernels and biases (slopes and head excluded)."""
    total = None
    for prefix, _ in _conv_names(config):
        for suffix in ("W", "b"):
            term = sumsq(params[f"{prefix}.{suffix}"])
            total = term if total is None else add(total, term)
    return scale(total, config.l2)


def pooled_lengths(n: int, blocks: int) -> list[int]:
    """Sequence length after each stride-2 pool, starting from n."""
    lengths = [n]
    for _ in range(blocks):
        lengths.append((lengths[-1] + 1) // 2)
    return lengths
