"""Reverse-mode gradients of the tensor ops against central differences."""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lowdim.errors import DivergenceError, StateError
from lowdim.nn import Tensor, backward, check_finite, concat, log_softmax, parameter, softmax, stack, where
from lowdim.nn.grad import max_relative_error, numeric_grad
from lowdim.nn.tensor import masked_max, masked_sum

TOL = 1e-4


def grad_err(loss_fn, *params):
    return max_relative_error(loss_fn, list(params))


def p(rng, *shape):
    return parameter(rng.normal(size=shape))


@pytest.mark.parametrize("op", [
    lambda a, b: a + b,
    lambda a, b: a - b,
    lambda a, b: a * b,
    lambda a, b: a / (b * b + 1.0),
    lambda a, b: (a - b).abs(),
    lambda a, b: 2.0 - a * 3.0,
    lambda a, b: 1.0 / (a * a + 2.0),
    lambda a, b: -a + b ** 2,
])
def test_binary_ops_broadcast_gradients(rng, op):
    a, b = p(rng, 3, 4), p(rng, 1, 4)
    w = Tensor(rng.normal(size=(3, 4)))
    assert grad_err(lambda: (op(a, b) * w).sum(), a, b) < TOL


@pytest.mark.parametrize("fn", ["relu", "tanh", "sigmoid", "exp"])
def test_unary_gradients(rng, fn):
    a = p(rng, 5, 3)
    w = Tensor(rng.normal(size=(5, 3)))
    assert grad_err(lambda: (getattr(a, fn)() * w).sum(), a) < TOL


def test_log_gradient(rng):
    a = parameter(rng.uniform(0.5, 2.0, size=(4, 3)))
    assert grad_err(lambda: a.log().sum(), a) < TOL


def test_matmul_batched_gradient(rng):
    a, b = p(rng, 2, 3, 4), p(rng, 2, 4, 5)
    w = Tensor(rng.normal(size=(2, 3, 5)))
    assert grad_err(lambda: ((a @ b) * w).sum(), a, b) < TOL


def test_matmul_value_matches_numpy(rng):
    a, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 2))
    np.testing.assert_allclose((Tensor(a) @ Tensor(b)).data, a @ b, rtol=0, atol=1e-12)


def test_reductions_and_shapes(rng):
    a = p(rng, 2, 3, 4)
    w = Tensor(rng.normal(size=(4, 3)))
    w2 = Tensor(rng.normal(size=(2, 3)))
    assert grad_err(lambda: (a.sum(axis=0).transpose(1, 0) * w).sum(), a) < TOL
    assert grad_err(lambda: (a.mean(axis=(0, 1)) ** 2).sum(), a) < TOL
    assert grad_err(lambda: (a.reshape(6, 4)[1:4, ::2] ** 2).sum(), a) < TOL
    assert grad_err(lambda: (a.max(axis=2) * w2).sum(), a) < TOL


def test_take_concat_stack_where(rng):
    a, b = p(rng, 4, 3), p(rng, 4, 3)
    idx = np.array([0, 2, 2, 3])
    assert grad_err(lambda: (a.take(idx, axis=0) ** 2).sum(), a) < TOL
    assert grad_err(lambda: (concat([a, b], axis=1) ** 2).sum(), a, b) < TOL
    w = Tensor(rng.normal(size=(2, 4, 3)))
    assert grad_err(lambda: (stack([a, b], axis=0) * w).sum(), a, b) < TOL
    cond = rng.random((4, 3)) > 0.5
    assert grad_err(lambda: (where(cond, a, b) ** 2).sum(), a, b) < TOL


def test_softmax_family(rng):
    a = p(rng, 3, 5)
    w = Tensor(rng.normal(size=(3, 5)))
    assert grad_err(lambda: (softmax(a, axis=-1) * w).sum(), a) < TOL
    assert grad_err(lambda: (log_softmax(a, axis=-1) * w).sum(), a) < TOL
    mask = np.array([[1, 1, 0, 1, 0], [1, 0, 0, 0, 0], [1, 1, 1, 1, 1]], dtype=bool)
    assert grad_err(lambda: (softmax(a, axis=-1, mask=mask) * w).sum(), a) < TOL
    s = softmax(a, axis=-1, mask=mask).data
    assert np.all(s[~mask] == 0)
    np.testing.assert_allclose(s.sum(axis=1), 1.0, atol=1e-12)


def test_masked_pooling(rng):
    a = p(rng, 2, 4, 3)
    mask = np.zeros((2, 4, 3), dtype=bool)
    mask[0, :2] = True
    mask[1, :] = True
    w = Tensor(rng.normal(size=(2, 3)))
    assert grad_err(lambda: (masked_sum(a, mask, axis=1) * w).sum(), a) < TOL
    assert grad_err(lambda: (masked_max(a, mask, axis=1) * w).sum(), a) < TOL
    np.testing.assert_allclose(masked_max(a, mask, axis=1).data[0], a.data[0, :2].max(axis=0))


@given(arrays(np.float64, (3, 4), elements=st.floats(-50, 50)))
def test_log_softmax_stable_and_normalised(x):
    ls = log_softmax(Tensor(x), axis=-1).data
    assert np.all(np.isfinite(ls))
    np.testing.assert_allclose(np.exp(ls).sum(axis=-1), 1.0, atol=1e-12)


def test_reused_node_accumulates(rng):
    a = p(rng, 3)
    assert grad_err(lambda: (a * a * a).sum() + a.sum(), a) < TOL
    a.grad = None
    b = a * 2.0
    (b * b).sum().backward()
    np.testing.assert_allclose(a.grad, 8.0 * a.data, atol=1e-12)


def test_backward_twice_raises(rng):
    a = p(rng, 3)
    loss = (a * a).sum()
    loss.backward()
    with pytest.raises(StateError):
        loss.backward()


def test_backward_needs_scalar_and_a_loss(rng):
    a = p(rng, 3)
    with pytest.raises(StateError):
        (a * 2.0).backward()
    with pytest.raises(StateError):
        backward(None, [a])


def test_backward_unreachable_params_get_zeros(rng):
    a, b = p(rng, 2), p(rng, 2)
    ga, gb = backward((a * a).sum(), [a, b])
    np.testing.assert_array_equal(gb, np.zeros(2))
    np.testing.assert_allclose(ga, 2 * a.data)


def test_check_finite():
    assert check_finite(Tensor(1.5)) == 1.5
    with pytest.raises(DivergenceError):
        check_finite(Tensor(np.nan))


def test_numeric_grad_oracle_on_quadratic():
    # d/dx sum(x^2) = 2x exactly, central differences are exact for quadratics
    x = parameter(np.array([1.0, -2.0, 0.5]))
    g = numeric_grad(lambda: float((x * x).sum().data), x)
    np.testing.assert_allclose(g, 2 * x.data, atol=1e-8)
