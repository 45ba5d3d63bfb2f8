"""Tensors, the gradient tape, the float32/float64 mode switch and RNG streams.

The engine is define-by-run: operations executed while a :class:`Tape` is
active push backward closures onto it, and ``Tape.backward`` replays them in
exact reverse order. A tape and the tensors recorded on it belong to one
worker thread; the active-tape stack is thread-local so independent models
can train concurrently.
"""

from __future__ import annotations

import hashlib
import threading
from contextlib import contextmanager
from typing import Callable

import numpy as np

_local = threading.local()

# Training runs in float32; gradient checking flips the core to float64.
_default_dtype = np.dtype(np.float32)

_ALLOWED_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))


def default_dtype() -> np.dtype:
    return _default_dtype


def set_default_dtype(dtype) -> None:
    global _default_dtype
    dt = np.dtype(dtype)
    if dt not in _ALLOWED_DTYPES:
        raise ValueError(f"unsupported dtype {dt}; use float32 or float64")
    _default_dtype = dt


@contextmanager
def using_dtype(dtype):
    """Temporarily switch the global dtype (e.g. float64 for grad checks)."""
    previous = default_dtype()
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(previous)


def _tape_stack() -> list:
    stack = getattr(_local, "tapes", None)
    if stack is None:
        stack = []
        _local.tapes = stack
    return stack


def active_tape() -> "Tape | None":
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """Dense n-d float array, optionally participating in differentiation.

    ``grad`` is allocated iff ``requires_grad``; it accumulates, so callers
    zero it between optimization steps.
    """

    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=default_dtype())
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(self.data) if self.requires_grad else None

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad[...] = 0.0

    def _track(self) -> None:
        """Mark as a recorded intermediate: allocate the grad buffer."""
        if not self.requires_grad:
            self.requires_grad = True
            self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{flag})"


class Tape:
    """Ordered record of backward closures for one forward pass."""

    def __init__(self):
        self._ops: list[Callable[[], None]] = []

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc) -> bool:
        _tape_stack().pop()
        return False

    def __len__(self) -> int:
        return len(self._ops)

    def record(self, backward: Callable[[], None]) -> None:
        self._ops.append(backward)

    def backward(self, loss: Tensor) -> None:
        """Seed d(loss)/d(loss) = 1 and replay closures in reverse order."""
        if loss.size != 1:
            raise ValueError("backward expects a scalar loss tensor")
        if not loss.requires_grad:
            raise ValueError("loss does not depend on any tracked tensor")
        loss.grad[...] = 1.0
        for op in reversed(self._ops):
            op()

    def clear(self) -> None:
        self._ops.clear()


def rng_stream(seed: int, *path) -> np.random.Generator:
    """Deterministic splittable stream: Philox keyed by a seed and a path.

    Non-integer path components are folded in via a stable blake2b digest, so
    streams like ``rng_stream(seed, "dropout", epoch, doc_id)`` are
    reproducible across runs and machines.
    """

    key = [int(seed) & 0xFFFFFFFFFFFFFFFF]
    for part in path:
        if isinstance(part, (int, np.integer)):
            key.append(int(part) & 0xFFFFFFFFFFFFFFFF)
        else:
            digest = hashlib.blake2b(str(part).encode("utf-8"), digest_size=8)
            key.append(int.from_bytes(digest.digest(), "little"))
    seq = np.random.SeedSequence(entropy=key)
    return np.random.Generator(np.random.Philox(seq))
