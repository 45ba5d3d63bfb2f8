"""Differentiable operations: primitives, text-model layers and losses.

Every op computes its result eagerly with numpy and, when a tape is active
and an input is tracked, records a single backward closure. Layer ops
(convolution, pooling, dropout) carry hand-written backwards; recurrent
steps are compositions of primitives so the same closures that run in
training are the ones validated by gradient checking.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..errors import ShapeMismatchError
from .tensor import Tensor, active_tape, default_dtype


def _tracked(*tensors: Tensor) -> bool:
    return active_tape() is not None and any(t.requires_grad for t in tensors)


def _record(out: Tensor, backward) -> None:
    out._track()
    active_tape().record(backward)


def constant(data) -> Tensor:
    return Tensor(np.asarray(data, dtype=default_dtype()))


def zeros(shape) -> Tensor:
    return Tensor(np.zeros(shape, dtype=default_dtype()))


def parameter(data, rng: np.random.Generator | None = None) -> Tensor:
    return Tensor(data, requires_grad=True)


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------

def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; ``b`` may be a vector broadcast over leading axes."""
    if a.shape != b.shape and not (
        b.ndim == 1 and a.ndim >= 1 and a.shape[-1] == b.shape[0]
    ):
        raise ShapeMismatchError(f"add: {a.shape} vs {b.shape}")
    out = Tensor(a.data + b.data)
    if _tracked(a, b):
        def backward():
            if a.requires_grad:
                a.grad += out.grad
            if b.requires_grad:
                if b.shape == a.shape:
                    b.grad += out.grad
                else:
                    b.grad += out.grad.reshape(-1, b.shape[0]).sum(axis=0)
        _record(out, backward)
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"sub: {a.shape} vs {b.shape}")
    out = Tensor(a.data - b.data)
    if _tracked(a, b):
        def backward():
            if a.requires_grad:
                a.grad += out.grad
            if b.requires_grad:
                b.grad -= out.grad
        _record(out, backward)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"mul: {a.shape} vs {b.shape}")
    out = Tensor(a.data * b.data)
    if _tracked(a, b):
        def backward():
            if a.requires_grad:
                a.grad += out.grad * b.data
            if b.requires_grad:
                b.grad += out.grad * a.data
        _record(out, backward)
    return out


def scale(a: Tensor, factor: float) -> Tensor:
    out = Tensor(a.data * factor)
    if _tracked(a):
        def backward():
            a.grad += out.grad * factor
        _record(out, backward)
    return out


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix/vector product for the [m,k]@[k,n], [k]@[k,n] and [m,k]@[k] cases."""
    if a.shape[-1] != b.shape[0]:
        raise ShapeMismatchError(f"matmul: {a.shape} @ {b.shape}")
    out = Tensor(a.data @ b.data)
    if _tracked(a, b):
        def backward():
            g = out.grad
            if a.ndim == 2 and b.ndim == 2:
                if a.requires_grad:
                    a.grad += g @ b.data.T
                if b.requires_grad:
                    b.grad += a.data.T @ g
            elif a.ndim == 1 and b.ndim == 2:
                if a.requires_grad:
                    a.grad += b.data @ g
                if b.requires_grad:
                    b.grad += np.outer(a.data, g)
            elif a.ndim == 2 and b.ndim == 1:
                if a.requires_grad:
                    a.grad += np.outer(g, b.data)
                if b.requires_grad:
                    b.grad += a.data.T @ g
            else:  # vector dot product
                if a.requires_grad:
                    a.grad += g * b.data
                if b.requires_grad:
                    b.grad += g * a.data
        _record(out, backward)
    return out


def concat(parts: Sequence[Tensor], axis: int = 0) -> Tensor:
    out = Tensor(np.concatenate([p.data for p in parts], axis=axis))
    if _tracked(*parts):
        sizes = [p.shape[axis] for p in parts]
        offsets = np.cumsum([0] + sizes)
        def backward():
            for p, start, stop in zip(parts, offsets[:-1], offsets[1:]):
                if p.requires_grad:
                    index = [slice(None)] * out.ndim
                    index[axis] = slice(start, stop)
                    p.grad += out.grad[tuple(index)]
        _record(out, backward)
    return out


def take_range(x: Tensor, start: int, stop: int, axis: int = 0) -> Tensor:
    index = [slice(None)] * x.ndim
    index[axis] = slice(start, stop)
    index = tuple(index)
    out = Tensor(x.data[index])
    if _tracked(x):
        def backward():
            x.grad[index] += out.grad
        _record(out, backward)
    return out


def row(x: Tensor, t: int) -> Tensor:
    """Row ``t`` of a [n,d] tensor as a [d] vector."""
    out = Tensor(x.data[t])
    if _tracked(x):
        def backward():
            x.grad[t] += out.grad
        _record(out, backward)
    return out


def stack_rows(rows: Sequence[Tensor]) -> Tensor:
    """Stack [d] vectors into a [n,d] matrix."""
    out = Tensor(np.stack([r.data for r in rows], axis=0))
    if _tracked(*rows):
        def backward():
            for t, r in enumerate(rows):
                if r.requires_grad:
                    r.grad += out.grad[t]
        _record(out, backward)
    return out


def sigmoid(x: Tensor) -> Tensor:
    z = x.data
    out_data = np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.abs(z))),
                        np.exp(-np.abs(z)) / (1.0 + np.exp(-np.abs(z))))
    out = Tensor(out_data)
    if _tracked(x):
        def backward():
            x.grad += out.grad * out.data * (1.0 - out.data)
        _record(out, backward)
    return out


def tanh(x: Tensor) -> Tensor:
    out = Tensor(np.tanh(x.data))
    if _tracked(x):
        def backward():
            x.grad += out.grad * (1.0 - out.data ** 2)
        _record(out, backward)
    return out


def sumsq(x: Tensor) -> Tensor:
    """Sum of squares, the building block of the L2 penalty."""
    out = Tensor(np.sum(x.data * x.data))
    if _tracked(x):
        def backward():
            x.grad += 2.0 * out.grad * x.data
        _record(out, backward)
    return out


def embedding_lookup(table: Tensor, ids: np.ndarray) -> Tensor:
    """Gather rows of an embedding table; backward scatter-adds."""
    ids = np.asarray(ids, dtype=np.intp)
    out = Tensor(table.data[ids])
    if _tracked(table):
        def backward():
            np.add.at(table.grad, ids, out.grad)
        _record(out, backward)
    return out


# ---------------------------------------------------------------------------
# layers
# ---------------------------------------------------------------------------

def conv1d_preact(x: Tensor, W: Tensor, b: Tensor, slope: Tensor | None = None) -> Tensor:
    """Same-padded 1-d convolution with optional learnable-slope pre-activation.

    ``x`` is [n, C_in], ``W`` is [k, C_in, C_out], ``b`` is [C_out]. When
    ``slope`` ([C_in]) is given, the input passes through a per-channel
    parametric ReLU *before* the linear map; the convolution output itself
    stays linear.
    """
    if x.ndim != 2 or W.ndim != 3:
        raise ShapeMismatchError(f"conv1d_preact: x {x.shape}, W {W.shape}")
    n, cin = x.shape
    k, cin_w, cout = W.shape
    if cin_w != cin or b.shape != (cout,):
        raise ShapeMismatchError(
            f"conv1d_preact: x {x.shape}, W {W.shape}, b {b.shape}"
        )
    if slope is not None and slope.shape != (cin,):
        raise ShapeMismatchError(f"conv1d_preact: slope {slope.shape} for C_in={cin}")

    if slope is None:
        activated = x.data
    else:
        activated = np.where(x.data >= 0, x.data, slope.data * x.data)

    pad_left = (k - 1) // 2
    pad_right = k // 2
    padded = np.zeros((n + pad_left + pad_right, cin), dtype=x.data.dtype)
    padded[pad_left:pad_left + n] = activated

    patches = np.empty((n, k * cin), dtype=x.data.dtype)
    for dk in range(k):
        patches[:, dk * cin:(dk + 1) * cin] = padded[dk:dk + n]
    w_flat = W.data.reshape(k * cin, cout)
    # Accumulate sequentially over the (tap, channel) axis rather than with a
    # single matmul: every output element is then the plain ordered sum
    # "acc += patch[j] * w[j]" that a per-element reference loop produces, so
    # the two agree bit for bit instead of only to BLAS reduction-order noise.
    acc = np.zeros((n, cout), dtype=x.data.dtype)
    for j in range(k * cin):
        acc += patches[:, j:j + 1] * w_flat[j]
    out = Tensor(acc + b.data)

    if _tracked(x, W, b) or (slope is not None and _tracked(slope)):
        def backward():
            g = out.grad
            if W.requires_grad:
                W.grad += (patches.T @ g).reshape(k, cin, cout)
            if b.requires_grad:
                b.grad += g.sum(axis=0)
            needs_input = x.requires_grad or (slope is not None and slope.requires_grad)
            if needs_input:
                g_patches = g @ w_flat.T
                g_padded = np.zeros_like(padded)
                for dk in range(k):
                    g_padded[dk:dk + n] += g_patches[:, dk * cin:(dk + 1) * cin]
                g_act = g_padded[pad_left:pad_left + n]
                if slope is None:
                    if x.requires_grad:
                        x.grad += g_act
                else:
                    negative = x.data < 0
                    if x.requires_grad:
                        x.grad += np.where(negative, slope.data * g_act, g_act)
                    if slope.requires_grad:
                        slope.grad += np.where(negative, g_act * x.data, 0.0).sum(axis=0)
        _record(out, backward)
    return out


def maxpool1d_stride2(x: Tensor) -> Tensor:
    """Window-2 stride-2 max pool over time; an odd tail keeps its own window."""
    if x.ndim != 2 or x.shape[0] < 1:
        raise ShapeMismatchError(f"maxpool1d_stride2: x {x.shape}")
    n, c = x.shape
    m = (n + 1) // 2
    pairs = n // 2
    out_data = np.empty((m, c), dtype=x.data.dtype)
    source = np.empty((m, c), dtype=np.intp)
    if pairs:
        first = x.data[0:2 * pairs:2]
        second = x.data[1:2 * pairs:2]
        keep_first = first >= second
        out_data[:pairs] = np.where(keep_first, first, second)
        base = np.arange(0, 2 * pairs, 2, dtype=np.intp)[:, None]
        source[:pairs] = np.where(keep_first, base, base + 1)
    if n % 2:
        out_data[-1] = x.data[-1]
        source[-1] = n - 1
    out = Tensor(out_data)
    if _tracked(x):
        cols = np.broadcast_to(np.arange(c, dtype=np.intp), (m, c))
        def backward():
            np.add.at(x.grad, (source, cols), out.grad)
        _record(out, backward)
    return out


def masked_global_pool(H: Tensor, true_len: int, mode: str = "max") -> Tensor:
    """Pool [n,C] over the first ``true_len`` rows; padded rows never leak in."""
    if H.ndim != 2:
        raise ShapeMismatchError(f"masked_global_pool: H {H.shape}")
    n, c = H.shape
    if not 1 <= true_len <= n:
        raise ValueError(f"masked_global_pool: true_len {true_len} outside [1, {n}]")
    region = H.data[:true_len]
    if mode == "max":
        winners = np.argmax(region, axis=0)
        out = Tensor(region[winners, np.arange(c)])
        if _tracked(H):
            def backward():
                np.add.at(H.grad, (winners, np.arange(c)), out.grad)
            _record(out, backward)
        return out
    if mode == "mean":
        out = Tensor(region.sum(axis=0) / true_len)
        if _tracked(H):
            def backward():
                H.grad[:true_len] += out.grad / true_len
            _record(out, backward)
        return out
    raise ValueError(f"masked_global_pool: unknown mode {mode!r}")


def spatial_dropout(x: Tensor, rate: float, mode: str,
                    rng: np.random.Generator | None = None) -> Tensor:
    """Zero whole embedding channels (columns of [n,d]) with probability ``rate``.

    Survivors are scaled by 1/(1-rate); eval mode is the exact identity.
    """
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"spatial_dropout: rate {rate} outside [0, 1)")
    if mode not in ("train", "eval"):
        raise ValueError(f"spatial_dropout: unknown mode {mode!r}")
    if mode == "eval" or rate == 0.0:
        return x
    if rng is None:
        raise ValueError("spatial_dropout: train mode needs an explicit rng stream")
    d = x.shape[-1]
    keep = (rng.random(d) >= rate).astype(x.data.dtype)
    column_scale = keep / np.asarray(1.0 - rate, dtype=x.data.dtype)
    out = Tensor(x.data * column_scale)
    if _tracked(x):
        def backward():
            x.grad += out.grad * column_scale
        _record(out, backward)
    return out


# ---------------------------------------------------------------------------
# recurrent steps
# ---------------------------------------------------------------------------

def lstm_step(x_t: Tensor, h_prev: Tensor, c_prev: Tensor,
              W: Tensor, b: Tensor) -> tuple[Tensor, Tensor]:
    """One LSTM step with gate rows stacked [input; forget; output; candidate]
    acting on the concatenated [h_prev, x_t] vector."""
    L = h_prev.shape[0]
    d = x_t.shape[0]
    if W.shape != (4 * L, L + d) or b.shape != (4 * L,):
        raise ShapeMismatchError(
            f"lstm_step: W {W.shape}, b {b.shape} for L={L}, d={d}"
        )
    joint = concat([h_prev, x_t])
    pre = add(matmul(W, joint), b)
    gate_in = sigmoid(take_range(pre, 0, L))
    gate_forget = sigmoid(take_range(pre, L, 2 * L))
    gate_out = sigmoid(take_range(pre, 2 * L, 3 * L))
    candidate = tanh(take_range(pre, 3 * L, 4 * L))
    c_t = add(mul(gate_forget, c_prev), mul(gate_in, candidate))
    h_t = mul(gate_out, tanh(c_t))
    return h_t, c_t


def lstm_run(xs: Sequence[Tensor], W: Tensor, b: Tensor, L: int) -> list[Tensor]:
    """Run an LSTM from zero state over a list of [d] inputs; returns all h_t."""
    h = zeros(L)
    c = zeros(L)
    states = []
    for x_t in xs:
        h, c = lstm_step(x_t, h, c, W, b)
        states.append(h)
    return states


def bilstm(x: Tensor, params, L: int) -> Tensor:
    """Bidirectional LSTM over [n,d]; output [n, 2L] concatenates both passes.

    ``params`` carries ``fwd_W/fwd_b/bwd_W/bwd_b`` tensors.
    """
    n = x.shape[0]
    inputs = [row(x, t) for t in range(n)]
    forward_states = lstm_run(inputs, params.fwd_W, params.fwd_b, L)
    backward_states = lstm_run(inputs[::-1], params.bwd_W, params.bwd_b, L)[::-1]
    return stack_rows(
        [concat([forward_states[t], backward_states[t]]) for t in range(n)]
    )


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------

def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits)
    exps = np.exp(shifted)
    return exps / exps.sum()


def softmax_cross_entropy(logits: Tensor, target: int) -> tuple[Tensor, np.ndarray]:
    """Stabilized softmax + negative log likelihood of ``target``.

    Returns the scalar loss tensor and the probability vector as plain numpy.
    """
    K = logits.shape[0]
    if K < 2:
        raise ShapeMismatchError("softmax_cross_entropy: need at least 2 logits")
    if not 0 <= target < K:
        raise ValueError(f"softmax_cross_entropy: target {target} outside 0..{K - 1}")
    z = logits.data
    m = np.max(z)
    log_norm = m + np.log(np.exp(z - m).sum())
    probs = np.exp(z - log_norm)
    out = Tensor(log_norm - z[target])
    if _tracked(logits):
        def backward():
            g = out.grad
            logits.grad += g * probs
            logits.grad[target] -= g
        _record(out, backward)
    return out, probs


def binary_cross_entropy(logit: Tensor, target: int) -> tuple[Tensor, float]:
    """Logistic loss on a single pre-sigmoid unit; returns (loss, p)."""
    if logit.size != 1:
        raise ShapeMismatchError("binary_cross_entropy: expects a single logit")
    if target not in (0, 1):
        raise ValueError(f"binary_cross_entropy: target {target} not in {{0, 1}}")
    z = float(logit.data.reshape(()))
    p = 1.0 / (1.0 + np.exp(-z)) if z >= 0 else np.exp(z) / (1.0 + np.exp(z))
    loss_value = max(z, 0.0) - z * target + np.log1p(np.exp(-abs(z)))
    out = Tensor(loss_value)
    if _tracked(logit):
        def backward():
            g = out.grad
            logit.grad += np.asarray(g * (p - target), dtype=logit.data.dtype).reshape(logit.shape)
        _record(out, backward)
    return out, float(p)
