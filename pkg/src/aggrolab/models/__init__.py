"""Classifier architectures, embeddings, and model persistence."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .bundle import FORMAT_VERSION, MAGIC, ModelBundle, load_bundle, save_bundle
from .common import BilstmParams, head_output_dim, probabilities
from .dpcnn import DpcnnConfig, dpcnn_forward, dpcnn_logits, pooled_lengths
from .dpcnn import init_params as dpcnn_init_params
from .dpcnn import regularization as dpcnn_regularization
from .drnn import DrnnConfig, drnn_forward, drnn_logits
from .drnn import init_params as drnn_init_params
from .embeddings import (
    FASTTEXT_DIM,
    GLOVE_DIM,
    OOV_POLICIES,
    PAD_INDEX,
    DualEmbedding,
    EmbeddingTable,
    build_vocabulary,
    hashed_embeddings,
    load_dual_embeddings,
)
from .pooled_bilstm import PooledBilstmConfig, pooled_bilstm_forward, pooled_bilstm_logits
from .pooled_bilstm import init_params as pooled_bilstm_init_params


@dataclass(frozen=True)
class Architecture:
    """Uniform handle over one classifier family."""

    name: str
    config_cls: type
    init_params: Callable
    logits: Callable
    forward: Callable
    regularizer: Callable | None = None


ARCHITECTURES: dict[str, Architecture] = {
    "dpcnn": Architecture("dpcnn", DpcnnConfig, dpcnn_init_params,
                          dpcnn_logits, dpcnn_forward, dpcnn_regularization),
    "drnn": Architecture("drnn", DrnnConfig, drnn_init_params,
                         drnn_logits, drnn_forward),
    "pooled_bilstm": Architecture("pooled_bilstm", PooledBilstmConfig,
                                  pooled_bilstm_init_params,
                                  pooled_bilstm_logits, pooled_bilstm_forward),
}

__all__ = [
    "ARCHITECTURES",
    "Architecture",
    "BilstmParams",
    "DpcnnConfig",
    "DrnnConfig",
    "DualEmbedding",
    "EmbeddingTable",
    "FASTTEXT_DIM",
    "FORMAT_VERSION",
    "GLOVE_DIM",
    "MAGIC",
    "ModelBundle",
    "OOV_POLICIES",
    "PAD_INDEX",
    "PooledBilstmConfig",
    "build_vocabulary",
    "dpcnn_forward",
    "dpcnn_logits",
    "dpcnn_regularization",
    "drnn_forward",
    "drnn_logits",
    "hashed_embeddings",
    "head_output_dim",
    "load_bundle",
    "load_dual_embeddings",
    "pooled_bilstm_forward",
    "pooled_bilstm_logits",
    "pooled_lengths",
    "probabilities",
    "save_bundle",
]
