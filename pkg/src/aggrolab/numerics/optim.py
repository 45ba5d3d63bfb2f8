"""First-order optimizers with per-parameter moment buffers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeMismatchError
from .tensor import Tensor


@dataclass
class OptimizerState:
    """Moment buffers and hyperparameters for Adam or RMSProp.

    Buffers are keyed by parameter name and allocated lazily on the first
    step so the state can be created before parameters exist.
    """

    kind: str
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    rho: float = 0.9
    eps: float = 1e-8
    step_count: int = 0
    first_moment: dict = field(default_factory=dict)
    second_moment: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("adam", "rmsprop"):
            raise ValueError(f"unknown optimizer kind {self.kind!r}")

    def _buffer(self, store: dict, name: str, param: Tensor) -> np.ndarray:
        buf = store.get(name)
        if buf is None:
            buf = np.zeros_like(param.data, dtype=np.float64)
            store[name] = buf
        elif buf.shape != param.data.shape:
            raise ShapeMismatchError(
                f"optimizer buffer for {name!r}: {buf.shape} vs {param.data.shape}"
            )
        return buf


def _require_grads(params: dict[str, Tensor]) -> None:
    for name, p in params.items():
        if p.grad is None:
            raise ValueError(f"parameter {name!r} has no gradient buffer")


def adam_step(state: OptimizerState, params: dict[str, Tensor]) -> dict[str, Tensor]:
    """Bias-corrected Adam update; at t=1 the step is -lr * g / (|g| + eps)."""
    if state.kind != "adam":
        raise ValueError("adam_step called with non-adam state")
    _require_grads(params)
    state.step_count += 1
    t = state.step_count
    correction1 = 1.0 - state.beta1 ** t
    correction2 = 1.0 - state.beta2 ** t
    for name, p in params.items():
        g = p.grad.astype(np.float64, copy=False)
        m = state._buffer(state.first_moment, name, p)
        v = state._buffer(state.second_moment, name, p)
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        update = (m / correction1) / (np.sqrt(v / correction2) + state.eps)
        p.data -= (state.lr * update).astype(p.data.dtype)
    return params


def rmsprop_step(state: OptimizerState, params: dict[str, Tensor]) -> dict[str, Tensor]:
    """RMSProp with accumulation factor rho and epsilon outside the sqrt."""
    if state.kind != "rmsprop":
        raise ValueError("rmsprop_step called with non-rmsprop state")
    _require_grads(params)
    state.step_count += 1
    for name, p in params.items():
        g = p.grad.astype(np.float64, copy=False)
        v = state._buffer(state.second_moment, name, p)
        v *= state.rho
        v += (1.0 - state.rho) * g * g
        update = g / (np.sqrt(v) + state.eps)
        p.data -= (state.lr * update).astype(p.data.dtype)
    return params


def optimizer_step(state: OptimizerState, params: dict[str, Tensor]) -> dict[str, Tensor]:
    if state.kind == "adam":
        return adam_step(state, params)
    return rmsprop_step(state, params)


def clip_gradient_norm(params: dict[str, Tensor], max_norm: float) -> float:
    """Scale all gradients so their joint L2 norm is at most ``max_norm``."""
    _require_grads(params)
    total = 0.0
    for p in params.values():
        total += float(np.sum(p.grad.astype(np.float64) ** 2))
    norm = float(np.sqrt(total))
    if norm > max_norm > 0.0:
        factor = max_norm / (norm + 1e-12)
        for p in params.values():
            p.grad *= factor
    return norm


def zero_gradients(params: dict[str, Tensor]) -> None:
    for p in params.values():
        p.zero_grad()
