"""Finite-difference validation of analytic gradients.

``grad_check`` compares tape gradients against central differences on a
random sample of coordinates per parameter tensor. It runs in float64 only;
float32 rounding would drown the signal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .tensor import Tape, Tensor, default_dtype


@dataclass
class TensorCheck:
    name: str
    max_rel_err: float
    checked: int
    worst_coord: tuple = ()


@dataclass
class GradCheckReport:
    tolerance: float
    rows: list[TensorCheck] = field(default_factory=list)

    @property
    def max_rel_err(self) -> float:
        return max((r.max_rel_err for r in self.rows), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_rel_err < self.tolerance

    def format_table(self) -> str:
        width = max([len(r.name) for r in self.rows] + [6])
        lines = [f"{'tensor':<{width}}  {'max_rel_err':>12}  checked"]
        for r in self.rows:
            lines.append(f"{r.name:<{width}}  {r.max_rel_err:>12.3e}  {r.checked}")
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"{verdict}: max {self.max_rel_err:.3e} vs tolerance {self.tolerance:.1e}")
        return "\n".join(lines)


def _relative_error(analytic: float, numeric: float) -> float:
    # Absolute below unit scale, relative above: robust for near-zero grads.
    return abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))


def grad_check(
    loss_fn: Callable[[], Tensor],
    params: Sequence[tuple[str, Tensor]],
    h: float = 1e-5,
    tolerance: float = 1e-4,
    samples_per_tensor: int = 8,
    rng: np.random.Generator | None = None,
) -> GradCheckReport:
    """Compare tape gradients of ``loss_fn()`` against central differences.

    ``loss_fn`` must rebuild the forward pass on every call (stochastic
    pieces must reseed internally so repeated calls see identical draws).
    Coordinates are sampled per tensor; pass ``samples_per_tensor=None`` to
    sweep every coordinate.
    """
    if default_dtype() != np.float64:
        raise RuntimeError("grad_check requires the float64 mode")
    if rng is None:
        rng = np.random.default_rng(0)

    for _, p in params:
        p.zero_grad()
    with Tape() as tape:
        loss = loss_fn()
        tape.backward(loss)

    report = GradCheckReport(tolerance=tolerance)
    for name, p in params:
        flat_data = p.data.reshape(-1)
        flat_grad = p.grad.reshape(-1)
        size = flat_data.size
        if samples_per_tensor is None or samples_per_tensor >= size:
            coords = np.arange(size)
        else:
            coords = rng.choice(size, size=samples_per_tensor, replace=False)
        worst = TensorCheck(name=name, max_rel_err=0.0, checked=len(coords))
        for c in coords:
            original = flat_data[c]
            flat_data[c] = original + h
            loss_plus = float(loss_fn().data.reshape(()))
            flat_data[c] = original - h
            loss_minus = float(loss_fn().data.reshape(()))
            flat_data[c] = original
            numeric = (loss_plus - loss_minus) / (2.0 * h)
            err = _relative_error(float(flat_grad[c]), numeric)
            if err > worst.max_rel_err:
                worst.max_rel_err = err
                worst.worst_coord = tuple(np.unravel_index(c, p.shape))
        report.rows.append(worst)
    return report
