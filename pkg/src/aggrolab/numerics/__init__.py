"""Reverse-mode autodiff core: tensors, ops, optimizers, gradient checking."""

from .tensor import (
    Tape,
    Tensor,
    active_tape,
    default_dtype,
    rng_stream,
    set_default_dtype,
    using_dtype,
)
from .ops import (
    add,
    bilstm,
    binary_cross_entropy,
    concat,
    constant,
    conv1d_preact,
    embedding_lookup,
    lstm_run,
    lstm_step,
    masked_global_pool,
    matmul,
    maxpool1d_stride2,
    mul,
    row,
    scale,
    sigmoid,
    softmax,
    softmax_cross_entropy,
    spatial_dropout,
    stack_rows,
    sub,
    sumsq,
    take_range,
    tanh,
    zeros,
)
from .optim import (
    OptimizerState,
    adam_step,
    clip_gradient_norm,
    optimizer_step,
    rmsprop_step,
    zero_gradients,
)
from .gradcheck import GradCheckReport, TensorCheck, grad_check

__all__ = [
    "Tape",
    "Tensor",
    "active_tape",
    "default_dtype",
    "rng_stream",
    "set_default_dtype",
    "using_dtype",
    "add",
    "bilstm",
    "binary_cross_entropy",
    "concat",
    "constant",
    "conv1d_preact",
    "embedding_lookup",
    "lstm_run",
    "lstm_step",
    "masked_global_pool",
    "matmul",
    "maxpool1d_stride2",
    "mul",
    "row",
    "scale",
    "sigmoid",
    "softmax",
    "softmax_cross_entropy",
    "spatial_dropout",
    "stack_rows",
    "sub",
    "sumsq",
    "take_range",
    "tanh",
    "zeros",
    "OptimizerState",
    "adam_step",
    "clip_gradient_norm",
    "optimizer_step",
    "rmsprop_step",
    "zero_gradients",
    "GradCheckReport",
    "TensorCheck",
    "grad_check",
]
