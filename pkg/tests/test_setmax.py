import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lowdim.errors import ValidationError
from lowdim.nn import max_relative_error, mse
from lowdim.nn.rng import make_rng
from lowdim.setmax import (MODEL_KINDS, ComparatorSetModel, DeepSetsModel, SetMaxSplitSpec, build_set_model,
                           comparator_set_forward, deepsets_forward, evaluate_mse, generate_setmax_split,
                           pack_sets, settransformer_forward)

MODELS = {k: build_set_model(k, make_rng(0, "test", k)) for k in MODEL_KINDS}

sets = st.lists(st.floats(0, 200, allow_nan=False), min_size=1, max_size=12)


def forward_one(kind, values):
    if kind == "comparator":
        return comparator_set_forward(MODELS[kind], values)
    if kind == "set_transformer":
        return settransformer_forward(MODELS[kind], values)
    return deepsets_forward(MODELS[kind], values)


@pytest.mark.parametrize("kind", MODEL_KINDS)
@given(values=sets, data=st.data())
def test_permutation_invariance(kind, values, data):
    perm = data.draw(st.permutations(values))
    a, b = forward_one(kind, values), forward_one(kind, perm)
    assert abs(a - b) <= 1e-9 * max(1.0, abs(a))


@pytest.mark.parametrize("kind", MODEL_KINDS)
def test_padding_does_not_leak(kind):
    model = MODELS[kind]
    batch = pack_sets([[3.0, 50.0], [1.0, 2.0, 3.0, 4.0, 5.0]])
    single = forward_one(kind, [3.0, 50.0])
    assert model.predict(batch)[0] == pytest.approx(single, abs=1e-9)
    batch.values[0, 2:] = 1e6
    assert model.predict(batch)[0] == pytest.approx(single, abs=1e-9)


def test_comparator_set_forward_oracle():
    model = ComparatorSetModel(np.random.default_rng(3))
    x = np.array([4.0, 1.0, 9.0])
    w = model.f.proj.weight.data[0, 0]
    p = w * x
    c = model.f.heads[0].layers[0]
    pair = (p[:, None] - p[None, :]) * c.weight.data[0, 0] + c.bias.data[0]
    summed = pair.sum(axis=1)
    s = model.summariser
    h = np.maximum(summed[:, None] @ s.layers[0].weight.data.T + s.layers[0].bias.data, 0)
    e = (h @ s.layers[1].weight.data.T + s.layers[1].bias.data)[:, 0]
    a = np.exp(e - e.max())
    a /= a.sum()
    assert comparator_set_forward(model, x) == pytest.approx((a * p).sum(), abs=1e-12)


def test_deepsets_max_identity_is_max():
    model = DeepSetsModel(np.random.default_rng(0), "max", phi_sizes=None, rho_sizes=None)
    assert deepsets_forward(model, [3.0, 8.5, -1.0]) == 8.5
    model = DeepSetsModel(np.random.default_rng(0), "mean", phi_sizes=None, rho_sizes=None)
    assert deepsets_forward(model, [3.0, 9.0]) == 6.0


@pytest.mark.parametrize("kind", MODEL_KINDS)
def test_gradients(kind):
    kw = {"hidden": 8, "heads": 2} if kind == "set_transformer" else {}
    model = build_set_model(kind, np.random.default_rng(1), **kw)
    batch = pack_sets([[0.3, 0.9, 0.1], [0.5, 0.2]])
    loss = lambda: mse(model(batch.values, batch.mask), batch.target)
    params = model.parameters()
    assert max_relative_error(loss, params, max_entries=20) < 1e-4


def test_split_ranges_and_targets():
    spec = SetMaxSplitSpec(n_train=500, n_test=300)
    train, test = generate_setmax_split(spec, make_rng(0, "t"))
    n_tr, n_te = train.mask.sum(1), test.mask.sum(1)
    assert n_tr.min() >= 2 and n_tr.max() <= 20 and n_te.min() >= 2 and n_te.max() <= 40
    vals = np.concatenate(train.samples())
    assert vals.min() >= 0 and vals.max() < 100
    tvals = np.concatenate(test.samples())
    assert tvals.min() >= 100 and tvals.max() <= 200
    np.testing.assert_array_equal(train.target, [max(s) for s in train.samples()])
    assert np.all(train.values[~train.mask] == 0)


def test_split_is_seeded():
    spec = SetMaxSplitSpec(n_train=50, n_test=50)
    a, _ = generate_setmax_split(spec, make_rng(4, "x"))
    b, _ = generate_setmax_split(spec, make_rng(4, "x"))
    np.testing.assert_array_equal(a.values, b.values)


def test_validation():
    with pytest.raises(ValidationError):
        SetMaxSplitSpec(train_range=(0, 150))
    with pytest.raises(ValidationError):
        SetMaxSplitSpec(train_card=(1, 5))
    with pytest.raises(ValidationError):
        pack_sets([[1.0], []])
    with pytest.raises(ValidationError):
        build_set_model("transformer", np.random.default_rng(0))
    with pytest.raises(ValidationError):
        comparator_set_forward(MODELS["comparator"], [])
    with pytest.raises(ValidationError):
        MODELS["deepsets_mean"](np.zeros((1, 2)), np.zeros((1, 2), dtype=bool))


def test_evaluate_mse_chunks_match_single_pass():
    model = MODELS["deepsets_mean"]
    _, test = generate_setmax_split(SetMaxSplitSpec(n_train=10, n_test=70), make_rng(2, "e"))
    whole = float(((model.predict(test) - test.target) ** 2).mean())
    assert evaluate_mse(model, test, chunk=16) == pytest.approx(whole, rel=1e-12)
