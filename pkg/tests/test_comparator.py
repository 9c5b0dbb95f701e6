import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lowdim.comparator import (AttributeSupervision, ComparatorModule, DistanceMode, attribute_labels,
                               head_distance, supervised_comparator_loss)
from lowdim.errors import DimensionError, ValidationError
from lowdim.nn import Tensor, max_relative_error


def test_distance_modes(rng):
    u, v = rng.normal(size=(2, 3)), rng.normal(size=(2, 3))
    np.testing.assert_array_equal(head_distance("vector_diff", u, v).data, u - v)
    np.testing.assert_array_equal(head_distance("abs-diff", u, v).data, np.abs(u - v))
    np.testing.assert_array_equal(head_distance(DistanceMode.CONCAT, u, v).data, np.concatenate([u, v], -1))
    with pytest.raises(ValidationError):
        DistanceMode.parse("cosine")
    with pytest.raises(DimensionError):
        head_distance("abs_diff", u, v[:, :2])


def test_identity_heads_give_projected_difference(rng):
    f = ComparatorModule(rng, 5, num_heads=3, proj_dim=2)
    x, y = rng.normal(size=(4, 5)), rng.normal(size=(4, 5))
    W, b = f.proj.weight.data, f.proj.bias.data
    np.testing.assert_allclose(f(x, y).data, (x @ W.T + b) - (y @ W.T + b), atol=1e-12)
    assert f.out_dim == 6


def test_head_k_sees_only_its_projection(rng):
    f = ComparatorModule(rng, 4, num_heads=2, proj_dim=1, head_hidden=[3], head_out=1)
    x, y = rng.normal(size=(6, 4)), rng.normal(size=(6, 4))
    d = (x - y) @ f.proj.weight.data.T
    want = np.concatenate([f.heads[k](d[:, k:k + 1]).data for k in range(2)], axis=1)
    np.testing.assert_allclose(f(x, y).data, want, atol=1e-12)


@given(st.sampled_from(list(DistanceMode)))
def test_abs_diff_and_concat_symmetry(mode):
    rng = np.random.default_rng(5)
    f = ComparatorModule(rng, 3, num_heads=2, proj_dim=2, mode=mode, combiner=[4, 1])
    x, y = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
    if mode is DistanceMode.ABS_DIFF:
        np.testing.assert_allclose(f(x, y).data, f(y, x).data, atol=1e-12)
    if mode is DistanceMode.VECTOR_DIFF:
        np.testing.assert_allclose(f(x, x).data, f(y, y).data, atol=1e-12)


def test_gradients(rng):
    f = ComparatorModule(rng, 4, num_heads=2, proj_dim=2, mode="abs_diff", head_hidden=[3], combiner=[5, 2],
                         combiner_residual=True)
    x, y = Tensor(rng.normal(size=(3, 4))), Tensor(rng.normal(size=(3, 4)))
    onehot = np.eye(2)[[0, 1, 1]]
    from lowdim.nn import cross_entropy
    assert max_relative_error(lambda: cross_entropy(f(x, y), onehot), f.parameters()) < 1e-4


def test_constructor_checks(rng):
    with pytest.raises(ValidationError):
        ComparatorModule(rng, 4, num_heads=0)
    with pytest.raises(ValidationError):
        ComparatorModule(rng, 4, proj_dim=0)
    with pytest.raises(DimensionError):
        ComparatorModule(rng, 4).project(np.zeros((2, 3)))


def test_supervision_labels_and_loss(rng):
    cont, cat = AttributeSupervision(), AttributeSupervision("categorical", "cross_entropy")
    np.testing.assert_array_equal(attribute_labels([3, 1], [1, 1], cont), [[2], [0]])
    np.testing.assert_array_equal(attribute_labels([3, 1], [1, 1], cat), [[1, 0], [0, 1]])
    with pytest.raises(ValidationError):
        AttributeSupervision("categorical", "mse")
    f = ComparatorModule(rng, 3, proj_dim=1)
    x, y = rng.normal(size=(4, 3)), rng.normal(size=(4, 3))
    loss = supervised_comparator_loss(f, x, y, np.arange(4.0), np.zeros(4), cont)
    pred = f(x, y).data
    assert loss.data == pytest.approx(((pred - np.arange(4.0)[:, None]) ** 2).mean(), abs=1e-12)
    with pytest.raises(ValidationError):
        supervised_comparator_loss(f, x, y, np.arange(4.0), np.zeros(4), cat)


def test_scalar_identity_example():
    f = ComparatorModule(np.random.default_rng(0), 1, num_heads=1, proj_dim=1, proj_bias=False)
    f.proj.weight.data[:] = 1.0
    assert f([[3.0]], [[1.0]]).data.tolist() == [[2.0]]
    x = np.random.default_rng(1).normal(size=(5, 1))
    np.testing.assert_array_equal(f(x, x).data, np.zeros((5, 1)))


def test_head_distance_examples():
    assert head_distance("vector_diff", [2.0], [5.0]).data.tolist() == [-3.0]
    assert head_distance("abs_diff", [2.0], [5.0]).data.tolist() == [3.0]
    assert head_distance("concat", [1.0], [2.0]).data.tolist() == [1.0, 2.0]


@pytest.mark.parametrize("mode", list(DistanceMode))
def test_two_heads_against_term_by_term_loop(mode):
    rng = np.random.default_rng(11)
    f = ComparatorModule(rng, 5, num_heads=2, proj_dim=3, mode=mode, head_hidden=[4], head_out=2, combiner=[6, 3])
    oi, oj = rng.normal(size=(4, 5)), rng.normal(size=(4, 5))

    def mlp(net, x):
        for i, layer in enumerate(net.layers):
            x = x @ layer.weight.data.T + layer.bias.data
            if i < len(net.layers) - 1:
                x = np.maximum(x, 0)
        return x

    W, b = f.proj.weight.data, f.proj.bias.data
    out = []
    for n in range(4):
        parts = []
        for k in range(2):
            rows = slice(3 * k, 3 * k + 3)
            u, v = W[rows] @ oi[n] + b[rows], W[rows] @ oj[n] + b[rows]
            d = {DistanceMode.VECTOR_DIFF: u - v, DistanceMode.ABS_DIFF: np.abs(u - v),
                 DistanceMode.CONCAT: np.concatenate([u, v])}[mode]
            parts.append(mlp(f.heads[k], d[None])[0])
        out.append(mlp(f.combiner, np.concatenate(parts)[None])[0])
    np.testing.assert_allclose(f(oi, oj).data, np.array(out), rtol=0, atol=1e-12)
