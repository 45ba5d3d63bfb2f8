"""Gradient verification sweep: every layer op and every full architecture.

Used by the test suite's acceptance gate and by the ``gradcheck`` CLI
subcommand.  Each case builds a scalar loss whose graph exercises one layer
(or one whole classifier) and compares tape gradients against central
finite differences in 64-bit mode.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import ARCHITECTURES, DpcnnConfig, DrnnConfig, PooledBilstmConfig
from .models.common import BilstmParams
from .models.dpcnn import regularization as dpcnn_regularization
from .numerics import (
    GradCheckReport,
    Tensor,
    add,
    bilstm,
    binary_cross_entropy,
    concat,
    conv1d_preact,
    embedding_lookup,
    grad_check,
    lstm_run,
    masked_global_pool,
    matmul,
    maxpool1d_stride2,
    rng_stream,
    softmax_cross_entropy,
    spatial_dropout,
    stack_rows,
    sumsq,
    using_dtype,
)

DEFAULT_SEEDS = tuple(range(5))
DEFAULT_TOLERANCE = 1e-4


@dataclass(frozen=True)
class VerificationResult:
    case: str
    seed: int
    report: GradCheckReport

    @property
    def passed(self) -> bool:
        return self.report.passed

    @property
    def max_rel_err(self) -> float:
        return self.report.max_rel_err


@dataclass(frozen=True)
class VerificationSuite:
    results: tuple[VerificationResult, ...]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def max_rel_err(self) -> float:
        return max(r.max_rel_err for r in self.results)

    def format_report(self) -> str:
        width = max(len(r.case) for r in self.results)
        lines = [f"{'case':<{width}}  seed  {'max_rel_err':>12}  status"]
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            lines.append(
                f"{r.case:<{width}}  {r.seed:>4}  {r.max_rel_err:>12.3e}  {status}")
        verdict = "PASS" if self.passed else "FAIL"
        lines.append(f"{verdict}: {len(self.results)} checks, "
                     f"max {self.max_rel_err:.3e} vs tolerance {self.tolerance:.1e}")
        return "\n".join(lines)


def _tensor(rng, shape, scale=1.0):
    return Tensor(rng.standard_normal(shape) * scale, requires_grad=True)


# ------------------------------------------------------------ layer-level cases


def _conv_case(seed):
    rng = rng_stream(seed, "verify", "conv")
    x = _tensor(rng, (6, 3))
    W = _tensor(rng, (3, 3, 4))
    b = _tensor(rng, (4,))
    slope = Tensor(np.full(3, 0.25), requires_grad=True)
    return (lambda: sumsq(conv1d_preact(x, W, b, slope)),
            [("x", x), ("W", W), ("b", b), ("slope", slope)])


def _maxpool_case(seed):
    rng = rng_stream(seed, "verify", "maxpool")
    x = _tensor(rng, (7, 4))
    return lambda: sumsq(maxpool1d_stride2(x)), [("x", x)]


def _masked_pool_case(seed):
    rng = rng_stream(seed, "verify", "masked-pool")
    H = _tensor(rng, (5, 4))
    return (lambda: sumsq(concat([masked_global_pool(H, 3, "max"),
                                  masked_global_pool(H, 3, "mean")])),
            [("H", H)])


def _dropout_case(seed):
    rng = rng_stream(seed, "verify", "dropout-x")
    x = _tensor(rng, (4, 6))
    def loss():
        out = spatial_dropout(x, 0.3, "train", rng_stream(seed, "verify", "mask"))
        return sumsq(out)
    return loss, [("x", x)]


def _lstm_case(seed):
    rng = rng_stream(seed, "verify", "lstm")
    L, d, n = 3, 2, 4
    W = _tensor(rng, (4 * L, L + d), scale=0.5)
    b = _tensor(rng, (4 * L,), scale=0.1)
    xs_data = [rng.standard_normal(d) for _ in range(n)]
    def loss():
        return sumsq(stack_rows(lstm_run([Tensor(x) for x in xs_data], W, b, L)))
    return loss, [("W", W), ("b", b)]


def _bilstm_case(seed):
    rng = rng_stream(seed, "verify", "bilstm")
    L, d, n = 3, 2, 4
    params = BilstmParams(
        fwd_W=_tensor(rng, (4 * L, L + d), scale=0.5),
        fwd_b=_tensor(rng, (4 * L,), scale=0.1),
        bwd_W=_tensor(rng, (4 * L, L + d), scale=0.5),
        bwd_b=_tensor(rng, (4 * L,), scale=0.1),
    )
    x = _tensor(rng, (n, d))
    return (lambda: sumsq(bilstm(x, params, L)),
            [("x", x), ("fwd_W", params.fwd_W), ("fwd_b", params.fwd_b),
             ("bwd_W", params.bwd_W), ("bwd_b", params.bwd_b)])


def _embedding_head_case(seed):
    rng = rng_stream(seed, "verify", "embed-head")
    table = _tensor(rng, (6, 4))
    W = _tensor(rng, (3, 4))
    b = _tensor(rng, (3,))
    ids = np.array([1, 5, 1, 2])
    def loss():
        pooled = masked_global_pool(embedding_lookup(table, ids), 4, "mean")
        logits = add(matmul(W, pooled), b)
        return softmax_cross_entropy(logits, 1)[0]
    return loss, [("table", table), ("W", W), ("b", b)]


def _binary_loss_case(seed):
    rng = rng_stream(seed, "verify", "binary")
    w = _tensor(rng, (1, 5))
    x = rng.standard_normal(5)
    def loss():
        return binary_cross_entropy(matmul(w, Tensor(x)), 1)[0]
    return loss, [("w", w)]


LAYER_CASES = (
    ("conv1d_preact", _conv_case),
    ("maxpool1d_stride2", _maxpool_case),
    ("masked_global_pool", _masked_pool_case),
    ("spatial_dropout", _dropout_case),
    ("lstm_run", _lstm_case),
    ("bilstm", _bilstm_case),
    ("embedding+softmax_head", _embedding_head_case),
    ("binary_head", _binary_loss_case),
)


# ----------------------------------------------------------- whole-model cases


def _toy_embedding(rng, vocab_size=6, dim=8):
    matrix = rng.standard_normal((vocab_size + 1, dim)) * 0.5
    matrix[0] = 0.0
    return matrix


def _arch_case(architecture, config, n_tokens, target=1, num_classes=3):
    def build(seed):
        rng = rng_stream(seed, "verify", architecture)
        arch = ARCHITECTURES[architecture]
        params = arch.init_params(config, rng, num_classes, feature_dim=5,
                                  embedding_matrix=_toy_embedding(rng))
        features = rng.standard_normal(5)
        ids = rng.integers(1, 7, size=n_tokens)
        def loss():
            logits = arch.logits(ids, features, params, config, mode="train",
                                 rng=rng_stream(seed, "verify", architecture, "drop"))
            if num_classes == 2:
                data_term = binary_cross_entropy(logits, target)[0]
            else:
                data_term = softmax_cross_entropy(logits, target)[0]
            if architecture == "dpcnn":
                return add(data_term, dpcnn_regularization(params, config))
            return data_term
        return loss, sorted(params.items())
    return build


ARCHITECTURE_CASES = (
    ("dpcnn", _arch_case(
        "dpcnn",
        DpcnnConfig(filters=6, region_dim=6, blocks=2, train_embedding=True),
        n_tokens=12)),
    ("drnn", _arch_case(
        "drnn",
        DrnnConfig(window=3, hidden=5, train_embedding=True),
        n_tokens=7)),
    ("pooled_bilstm", _arch_case(
        "pooled_bilstm",
        PooledBilstmConfig(hidden=5, train_embedding=True),
        n_tokens=6)),
    ("pooled_bilstm(binary)", _arch_case(
        "pooled_bilstm",
        PooledBilstmConfig(hidden=4, train_embedding=True),
        n_tokens=5, num_classes=2)),
)


def run_verification(
    seeds=DEFAULT_SEEDS,
    tolerance: float = DEFAULT_TOLERANCE,
    samples_per_tensor: int = 8,
    cases=LAYER_CASES + ARCHITECTURE_CASES,
) -> VerificationSuite:
    """Sweep every case over every seed; all math runs in 64-bit mode."""
    results = []
    with using_dtype(np.float64):
        for name, build in cases:
            for seed in seeds:
                loss_fn, params = build(seed)
                report = grad_check(loss_fn, params, tolerance=tolerance,
                                    samples_per_tensor=samples_per_tensor,
                                    rng=rng_stream(seed, "verify-coords", name))
                results.append(VerificationResult(name, seed, report))
    return VerificationSuite(tuple(results), tolerance)
