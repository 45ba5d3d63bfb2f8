"""Tape mechanics, dtype mode, seeded streams, and per-op gradient fidelity.

Every differentiable op is checked against central finite differences in
64-bit mode; forward values are checked against plain numpy expressions.
"""

import numpy as np
import pytest

from aggrolab.errors import ShapeMismatchError
from aggrolab.numerics import (
    Tape,
    Tensor,
    add,
    concat,
    default_dtype,
    embedding_lookup,
    grad_check,
    matmul,
    mul,
    rng_stream,
    row,
    scale,
    sigmoid,
    stack_rows,
    sub,
    sumsq,
    take_range,
    tanh,
    using_dtype,
)


@pytest.fixture
def f64():
    with using_dtype(np.float64):
        yield


def rand(shape, seed=0, requires_grad=True):
    data = rng_stream(seed, "test", str(shape)).standard_normal(shape)
    return Tensor(data, requires_grad=requires_grad)


# ---------------------------------------------------------------- tensor/tape


def test_default_dtype_is_float32():
    assert default_dtype() == np.float32
    assert Tensor(np.ones(3)).data.dtype == np.float32


def test_using_dtype_restores_on_exit():
    with using_dtype(np.float64):
        assert default_dtype() == np.float64
        assert Tensor(np.ones(2)).data.dtype == np.float64
        with using_dtype(np.float32):
            assert default_dtype() == np.float32
        assert default_dtype() == np.float64
    assert default_dtype() == np.float32


def test_requires_grad_allocates_zeroed_buffer():
    t = Tensor(np.ones((2, 3)), requires_grad=True)
    assert t.grad is not None
    np.testing.assert_array_equal(t.grad, 0.0)
    t.grad += 5.0
    t.zero_grad()
    np.testing.assert_array_equal(t.grad, 0.0)


def test_tensor_shape_helpers():
    t = Tensor(np.zeros((4, 2)))
    assert t.shape == (4, 2) and t.ndim == 2 and t.size == 8


def test_ops_outside_tape_record_nothing():
    a = Tensor(np.ones(3), requires_grad=True)
    out = mul(a, a)
    np.testing.assert_allclose(out.data, 1.0)
    assert not out.requires_grad  # nothing tracked without an active tape


def test_backward_needs_scalar(f64):
    a = rand(3)
    with Tape() as tape:
        out = mul(a, a)
        with pytest.raises(ValueError, match="scalar"):
            tape.backward(out)


def test_backward_needs_tracked_loss(f64):
    with Tape() as tape:
        loss = Tensor(np.array(1.0))
        with pytest.raises(ValueError, match="depend"):
            tape.backward(loss)


def test_grads_accumulate_across_tapes(f64):
    a = Tensor(np.array([2.0, 3.0]), requires_grad=True)
    for _ in range(2):
        with Tape() as tape:
            tape.backward(sumsq(a))
    np.testing.assert_allclose(a.grad, 2 * 2 * a.data)  # two passes of 2a


def test_tape_length_counts_recorded_ops(f64):
    a = rand(3)
    with Tape() as tape:
        add(mul(a, a), a)
        assert len(tape) == 2


# ---------------------------------------------------------------- rng streams


def test_rng_stream_is_reproducible():
    a = rng_stream(7, "x", 1).standard_normal(5)
    b = rng_stream(7, "x", 1).standard_normal(5)
    np.testing.assert_array_equal(a, b)


def test_rng_stream_separates_paths():
    draws = {
        name: rng_stream(7, *path).standard_normal(4).tobytes()
        for name, path in {
            "base": ("x", 1), "other-component": ("x", 2),
            "other-name": ("y", 1), "longer": ("x", 1, "z"),
        }.items()
    }
    assert len(set(draws.values())) == len(draws)


def test_rng_stream_separates_seeds():
    a = rng_stream(1, "x").standard_normal(4)
    b = rng_stream(2, "x").standard_normal(4)
    assert not np.array_equal(a, b)


# ---------------------------------------------------------------- forward math


def test_add_sub_mul_scale_values(f64):
    a = Tensor(np.array([1.0, -2.0, 3.0]))
    b = Tensor(np.array([4.0, 5.0, -6.0]))
    np.testing.assert_array_equal(add(a, b).data, a.data + b.data)
    np.testing.assert_array_equal(sub(a, b).data, a.data - b.data)
    np.testing.assert_array_equal(mul(a, b).data, a.data * b.data)
    np.testing.assert_array_equal(scale(a, -1.5).data, -1.5 * a.data)


@pytest.mark.parametrize("op", [add, sub, mul])
def test_elementwise_ops_reject_mismatched_shapes(op, f64):
    with pytest.raises(ShapeMismatchError):
        op(Tensor(np.ones(3)), Tensor(np.ones(4)))


def test_matmul_matches_numpy(f64):
    A = rand((4, 3), seed=1)
    v = rand(3, seed=2)
    np.testing.assert_array_equal(matmul(A, v).data, A.data @ v.data)
    with pytest.raises(ShapeMismatchError):
        matmul(A, rand(5, seed=3))


def test_concat_take_range_row_stack(f64):
    a = Tensor(np.array([1.0, 2.0]))
    b = Tensor(np.array([3.0]))
    joined = concat([a, b])
    np.testing.assert_array_equal(joined.data, [1.0, 2.0, 3.0])
    np.testing.assert_array_equal(take_range(joined, 1, 3).data, [2.0, 3.0])
    m = stack_rows([a, Tensor(np.array([5.0, 6.0]))])
    assert m.shape == (2, 2)
    np.testing.assert_array_equal(row(m, 1).data, [5.0, 6.0])


def test_sigmoid_tanh_sumsq_values(f64):
    x = np.array([-2.0, 0.0, 3.0])
    np.testing.assert_allclose(sigmoid(Tensor(x)).data, 1 / (1 + np.exp(-x)),
                               rtol=1e-15)
    np.testing.assert_allclose(tanh(Tensor(x)).data, np.tanh(x), rtol=1e-15)
    assert float(sumsq(Tensor(x)).data) == pytest.approx(13.0, abs=1e-12)


def test_embedding_lookup_gathers_rows(f64):
    table = Tensor(np.arange(12.0).reshape(4, 3))
    out = embedding_lookup(table, np.array([2, 0, 2]))
    np.testing.assert_array_equal(out.data, table.data[[2, 0, 2]])


def test_embedding_lookup_accumulates_repeated_rows(f64):
    table = Tensor(np.zeros((3, 2)), requires_grad=True)
    with Tape() as tape:
        out = embedding_lookup(table, np.array([1, 1, 2]))
        tape.backward(sumsq(add(out, Tensor(np.ones((3, 2))))))
    # d(sum (x+1)^2)/dx = 2(x+1) = 2; row 1 appears twice.
    np.testing.assert_allclose(table.grad[1], 4.0)
    np.testing.assert_allclose(table.grad[2], 2.0)
    np.testing.assert_allclose(table.grad[0], 0.0)


# ---------------------------------------------------------------- gradients


def test_linear_gradient_is_near_exact(f64):
    # For L = w.x the analytic gradient is x itself; finite differences on a
    # linear function should agree to ~1e-8 or better.
    w = rand(6, seed=4)
    x = rng_stream(5, "lin").standard_normal(6)
    report = grad_check(lambda: matmul(Tensor(x.reshape(1, 6)), w),
                        [("w", w)], samples_per_tensor=None)
    assert report.max_rel_err < 1e-8, report.format_table()


@pytest.mark.parametrize("seed", range(5))
def test_every_op_composite_gradient(seed, f64):
    """One expression that routes through every differentiable op."""
    A = rand((3, 4), seed=seed)
    v = rand(4, seed=seed + 100)
    u = rand(3, seed=seed + 200)
    table = rand((5, 3), seed=seed + 300)

    def loss():
        looked = embedding_lookup(table, np.array([1, 4, 1]))
        rows_sum = add(add(row(looked, 0), row(looked, 1)), row(looked, 2))
        h = tanh(add(matmul(A, v), rows_sum))
        s = sigmoid(mul(h, u))
        joined = concat([s, scale(sub(h, u), 0.5)])
        stacked = stack_rows([take_range(joined, 0, 3), take_range(joined, 3, 6)])
        return sumsq(stacked)

    report = grad_check(loss, [("A", A), ("v", v), ("u", u), ("table", table)],
                        rng=rng_stream(seed, "coords"))
    assert report.passed, report.format_table()


def test_grad_check_refuses_float32_mode():
    w = Tensor(np.ones(2), requires_grad=True)
    with pytest.raises(RuntimeError, match="float64"):
        grad_check(lambda: sumsq(w), [("w", w)])


def test_grad_check_report_table_format(f64):
    w = rand(3)
    report = grad_check(lambda: sumsq(w), [("w", w)], samples_per_tensor=None)
    table = report.format_table()
    assert "w" in table and "PASS" in table
    assert report.passed and report.max_rel_err < 1e-6
