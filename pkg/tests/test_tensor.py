"""Primitive-level contracts of the tape engine."""

import numpy as np
import pytest

from safecast.errors import ArgumentError, DimensionError
from safecast.nn import (
    Parameter,
    Tape,
    Tensor,
    concat,
    cumsum,
    dropout,
    elu,
    exp,
    glu,
    leaky_relu,
    log,
    matmul,
    maximum_scalar,
    mean,
    mul,
    reshape,
    sigmoid,
    softmax,
    softplus,
    sqrt,
    stack,
    sum_,
    swapaxes,
    tanh,
)

from helpers import assert_gradients_match


def test_tensor_is_float64_row_major():
    t = Tensor([[1, 2], [3, 4]])
    assert t.data.dtype == np.float64
    assert t.data.flags["C_CONTIGUOUS"]
    assert t.shape == (2, 2)
    assert t.size == 4


def test_parameter_grad_starts_and_resets_to_zero():
    p = Parameter(np.ones((2, 3)), name="w")
    assert p.grad.shape == p.data.shape
    assert np.all(p.grad == 0)
    p.grad = p.grad + 5.0
    p.reset_grad()
    assert np.all(p.grad == 0)


def test_backward_requires_scalar():
    p = Parameter(np.ones(3))
    with Tape() as tape:
        y = mul(p, 2.0)
        with pytest.raises(DimensionError):
            tape.backward(y)


def test_backward_replays_in_reverse_order_once():
    calls = []
    p = Parameter(np.ones(1), name="p")
    with Tape() as tape:
        a = mul(p, 2.0)
        b = mul(a, 3.0)
        c = sum_(b)
        order = [id(node[0]) for node in tape._nodes]
        assert order == [id(a), id(b), id(c)]
        seen = []
        original = list(tape._nodes)
        tape._nodes = [
            (out, (lambda fn, out: (lambda g: (seen.append(id(out)), fn(g))))(fn, out))
            for out, fn in original
        ]
        tape.backward(c)
    assert seen == [id(c), id(b), id(a)]
    assert p.grad == pytest.approx(6.0)


def test_gradient_accumulates_across_multiple_uses():
    p = Parameter(np.array([3.0]), name="p")
    with Tape() as tape:
        y = sum_(mul(p, p))  # p**2, dy/dp = 2p
        tape.backward(y)
    assert p.grad == pytest.approx(6.0)


def test_broadcast_add_unbroadcasts_gradient():
    w = Parameter(np.zeros(3), name="bias")
    x = Tensor(np.ones((4, 3)))
    with Tape() as tape:
        y = sum_(x + w)
        tape.backward(y)
    np.testing.assert_allclose(w.grad, np.full(3, 4.0))


def test_matmul_shape_error_includes_both_shapes():
    a = Tensor(np.ones((2, 3)))
    b = Tensor(np.ones((4, 2)))
    with pytest.raises(DimensionError) as err:
        matmul(a, b)
    assert "(2, 3)" in str(err.value) and "(4, 2)" in str(err.value)


@pytest.mark.parametrize("seed", range(10))
def test_primitive_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(seed)
    a = Parameter(rng.uniform(0.5, 2.0, (3, 4)), name="a")
    b = Parameter(rng.uniform(0.5, 2.0, (4, 2)), name="b")

    def loss():
        y = matmul(a, b)
        y = y + tanh(y) * 0.5
        z = sigmoid(y) * exp(mul(y, 0.1)) + log(maximum_scalar(y, 0.3))
        z = z + sqrt(maximum_scalar(y, 0.5)) + softplus(y) + elu(y - 1.0)
        z = z + leaky_relu(y - 1.0, 0.2)
        return mean(z) + sum_(softmax(z, axis=-1)) * 0.1

    assert_gradients_match(loss, [a, b], rel_tol=1e-5)


@pytest.mark.parametrize("seed", range(10))
def test_shape_op_gradients_match_finite_differences(seed):
    rng = np.random.default_rng(100 + seed)
    a = Parameter(rng.normal(size=(2, 3, 4)), name="a")

    def loss():
        y = swapaxes(reshape(a, (6, 4)), 0, 1)
        y = concat([y, y * 2.0], axis=0)
        y = stack([y, y + 1.0], axis=1)
        z = cumsum(y, axis=0)
        picked = z[1:3, :, 2:5]
        return mean(mul(picked, picked))

    assert_gradients_match(loss, [a], rel_tol=1e-5)


def test_softmax_rows_sum_to_one_within_1e12():
    rng = np.random.default_rng(7)
    x = Tensor(rng.normal(scale=5.0, size=(20, 9)))
    s = softmax(x, axis=-1).data
    np.testing.assert_allclose(s.sum(axis=-1), 1.0, atol=1e-12)
    assert np.all(s >= 0)


def test_softmax_symmetry():
    np.testing.assert_allclose(softmax(Tensor([0.0, 0.0])).data, [0.5, 0.5], atol=1e-15)


def test_softmax_invalid_axis():
    with pytest.raises(DimensionError):
        softmax(Tensor(np.ones((2, 2))), axis=5)


def test_elu_boundaries():
    assert elu(Tensor([0.0])).data[0] == 0.0
    assert elu(Tensor([-60.0])).data[0] == pytest.approx(-1.0, abs=1e-15)
    assert elu(Tensor([2.5])).data[0] == 2.5


def test_leaky_relu_definition():
    assert leaky_relu(Tensor([-2.0]), 0.1).data[0] == pytest.approx(-0.2)
    assert leaky_relu(Tensor([2.0]), 0.1).data[0] == 2.0


def test_glu_requires_even_channels():
    with pytest.raises(DimensionError):
        glu(Tensor(np.ones((2, 3))))
    y = glu(Tensor(np.array([[1.0, 1.0, 0.0, 0.0]])))
    np.testing.assert_allclose(y.data, [[0.5, 0.5]])


def test_dropout_rate_zero_and_eval_are_identity():
    rng = np.random.default_rng(0)
    x = Tensor(np.arange(12.0).reshape(3, 4))
    assert dropout(x, 0.0, True, rng) is x
    assert dropout(x, 0.9, False, rng) is x


def test_dropout_rejects_bad_rate():
    rng = np.random.default_rng(0)
    with pytest.raises(ArgumentError):
        dropout(Tensor([1.0]), 1.0, True, rng)
    with pytest.raises(ArgumentError):
        dropout(Tensor([1.0]), -0.1, True, rng)


def test_dropout_zero_fraction_matches_rate():
    rng = np.random.default_rng(42)
    x = Tensor(np.ones(100_000))
    rate = 0.3
    y = dropout(x, rate, True, rng).data
    zero_fraction = np.mean(y == 0.0)
    assert abs(zero_fraction - rate) < 0.01
    survivors = y[y != 0.0]
    np.testing.assert_allclose(survivors, 1.0 / (1.0 - rate))


def test_forward_deterministic_given_seed():
    x = Tensor(np.linspace(-1, 1, 24).reshape(4, 6))
    outs = []
    for _ in range(2):
        rng = np.random.default_rng(123)
        outs.append(dropout(tanh(x), 0.5, True, rng).data)
    np.testing.assert_array_equal(outs[0], outs[1])


@pytest.mark.parametrize("seed", range(5))
def test_no_nans_on_bounded_inputs(seed):
    rng = np.random.default_rng(seed)
    x = Tensor(rng.uniform(-1e3, 1e3, size=(8, 8)))
    for out in (
        tanh(x),
        sigmoid(x),
        elu(x),
        softplus(x),
        softmax(x, axis=-1),
        leaky_relu(x, 0.2),
    ):
        assert np.all(np.isfinite(out.data))
