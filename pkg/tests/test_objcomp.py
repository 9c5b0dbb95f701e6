import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lowdim.errors import DimensionError, ValidationError
from lowdim.nn import cross_entropy, make_rng, max_relative_error
from lowdim.objcomp import (COMPARABLE, LATENT_NAMES, LatentSampler, LatentSpec, ObjCompConfig, ObservationModel,
                            build_encoder, build_pair_model, canonical_attr, comparison_labels,
                            generate_comparison_dataset, load_dataset, pair_forward, pretrain_encoder,
                            render_observation, save_dataset, window_indices)
from lowdim.objcomp.train import PairData, accuracy, make_splits

SPEC = LatentSpec()


def test_window_examples():
    np.testing.assert_array_equal(window_indices(10, 0.0, 0.6), np.arange(6))
    np.testing.assert_array_equal(window_indices(10, 0.6, 1.0), np.arange(6, 10))
    np.testing.assert_array_equal(window_indices(32, 0.0, 0.6), np.arange(19))
    np.testing.assert_array_equal(window_indices(6, 0.6, 1.0), [3, 4, 5])
    with pytest.raises(ValidationError):
        window_indices(10, 0.5, 0.5)
    with pytest.raises(ValidationError):
        window_indices(2, 0.1, 0.2)


@given(st.sampled_from(COMPARABLE), st.floats(0.1, 0.9))
def test_windows_partition_the_grid(attr, beta):
    g = SPEC.grid_size(attr)
    lo, hi = np.arange(g)[: int(np.floor(beta * g + 1e-9))], None
    if len(lo) == 0 or len(lo) == g:
        return
    low, high = window_indices(g, 0.0, beta), window_indices(g, beta, 1.0)
    np.testing.assert_array_equal(np.concatenate([low, high]), np.arange(g))


def test_colour_values_and_aliases():
    np.testing.assert_allclose(SPEC.values("color"), np.arange(1, 11) / 10)
    assert canonical_attr("X-Position") == "x"
    with pytest.raises(ValidationError):
        canonical_attr("hue")


def test_labels_are_three_way():
    np.testing.assert_array_equal(comparison_labels([1, 2, 3], [2, 2, 2]),
                                  [[1, 0, 0], [0, 1, 0], [0, 0, 1]])


@pytest.mark.parametrize("attr", COMPARABLE)
def test_split_supports(attr):
    train, test = generate_comparison_dataset(attr, 2000, 2000, np.random.default_rng(0))
    col = LATENT_NAMES.index(attr)
    g = SPEC.grid_size(attr)
    cut = int(np.floor(0.6 * g + 1e-9))
    assert train.lat_a[:, col].max() < cut and train.lat_b[:, col].max() < cut
    assert test.lat_a[:, col].min() >= cut and test.lat_b[:, col].min() >= cut
    # the other latents range over their full grids in both splits
    other = [c for c in range(5) if c != col]
    for c in other:
        assert len(np.unique(test.lat_a[:, c])) == SPEC.sizes[c]
    np.testing.assert_array_equal(train.labels, comparison_labels(train.lat_a[:, col], train.lat_b[:, col]))


def test_non_comparable_attribute_rejected():
    with pytest.raises(ValidationError):
        generate_comparison_dataset("shape", 10, 10)


def test_cache_round_trip(tmp_path):
    train, _ = generate_comparison_dataset("colour", 50, 10, np.random.default_rng(1))
    save_dataset(tmp_path / "c.jsonl", train, {"seed": 1})
    back = load_dataset(tmp_path / "c.jsonl")
    np.testing.assert_array_equal(back.lat_a, train.lat_a)
    np.testing.assert_array_equal(back.labels, train.labels)
    lines = (tmp_path / "c.jsonl").read_text().splitlines()
    lines[1] = lines[1].replace('"label": 0', '"label": 2').replace('"label": 1', '"label": 0')
    (tmp_path / "bad.jsonl").write_text("\n".join(lines) + "\n")
    with pytest.raises(ValidationError):
        load_dataset(tmp_path / "bad.jsonl")


def test_renderer_is_deterministic_and_checks_grid():
    lat = LatentSampler(SPEC).sample(np.random.default_rng(0), 8)
    for kind in ("features", "image"):
        om = ObservationModel(kind=kind)
        np.testing.assert_array_equal(om.render(lat), om.render(lat))
        assert om.render(lat).shape == (8, *om.obs_shape)
    with pytest.raises(ValidationError):
        render_observation([0, 6, 0, 0, 0])
    with pytest.raises(ValidationError):
        ObservationModel(kind="video")


def test_image_intensity_follows_colour_and_extent_follows_size():
    om = ObservationModel(kind="image")
    lo = render_observation([0, 0, 16, 16, 2], om)
    hi = render_observation([0, 5, 16, 16, 9], om)
    assert lo.max() == pytest.approx(0.3) and hi.max() == pytest.approx(1.0)
    assert (hi > 0).sum() > (lo > 0).sum()


def test_image_position_moves_centroid():
    om = ObservationModel(kind="image")
    cols = np.arange(32) + 0.5
    cx = [(render_observation([1, 2, x, 10, 9], om)[0].sum(0) * cols).sum()
          / render_observation([1, 2, x, 10, 9], om)[0].sum() for x in (0, 15, 31)]
    assert cx[0] < cx[1] < cx[2]


@pytest.mark.parametrize("kind", ["comparator", "baseline"])
@pytest.mark.parametrize("obs", [(32,), (1, 16, 16)])
def test_pair_models_output_and_gradients(kind, obs):
    rng = np.random.default_rng(0)
    enc = build_encoder(rng, obs)
    model = build_pair_model(kind, rng, enc)
    a, b = rng.normal(size=(3, *obs)), rng.normal(size=(3, *obs))
    probs = pair_forward(model, a, b)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
    onehot = np.eye(3)[[0, 1, 2]]
    # a conv bias shifts a whole channel of pre-activations, so a wide
    # difference step straddles relu kinks; a narrower one does not
    h = 1e-6 if len(obs) == 3 else 1e-5
    err = max_relative_error(lambda: cross_entropy(model(a, b), onehot), model.parameters(), h=h,
                             max_entries=6, rng=np.random.default_rng(1))
    assert err < 1e-4


def test_comparator_is_antisymmetric_on_identical_inputs():
    rng = np.random.default_rng(2)
    model = build_pair_model("comparator", rng, build_encoder(rng, (32,)))
    a, b = rng.normal(size=(4, 32)), rng.normal(size=(4, 32))
    np.testing.assert_allclose(model.logits(a, a).data, model.logits(b, b).data, atol=1e-12)


def test_pair_shape_mismatch():
    rng = np.random.default_rng(0)
    model = build_pair_model("baseline", rng, build_encoder(rng, (32,)))
    with pytest.raises(DimensionError):
        model(np.zeros((2, 32)), np.zeros((3, 32)))
    with pytest.raises(ValidationError):
        build_pair_model("siamese", rng, build_encoder(rng, (32,)))
    with pytest.raises(ValidationError):
        build_encoder(rng, (3, 8, 8))


def test_pretraining_lowers_reconstruction_error():
    om = ObservationModel()
    lat = LatentSampler(SPEC).sample(make_rng(0, "t"), 3000)
    enc = build_encoder(make_rng(0, "enc"), om.obs_shape)
    hist = pretrain_encoder(enc, om.render(lat), epochs=3)
    assert len(hist) == 4 and hist[-1] < 0.5 * hist[0]
    assert pretrain_encoder(enc, om.render(lat), enabled=False) == []


def test_splits_are_seeded_and_config_checked():
    cfg = ObjCompConfig(n_train=40, n_test=30, n_id=20)
    a, b = make_splits("size", cfg, 3), make_splits("size", cfg, 3)
    np.testing.assert_array_equal(a.train.lat_a, b.train.lat_a)
    np.testing.assert_array_equal(a.ood.lat_b, b.ood.lat_b)
    with pytest.raises(ValidationError):
        ObjCompConfig(n_train=0)


def test_accuracy_against_perfect_model():
    cfg = ObjCompConfig(n_train=10, n_test=10, n_id=10)
    data = PairData(make_splits("colour", cfg, 0).iid, cfg.observation_model())

    class Oracle:
        def logits(self, oa, ob):
            from lowdim.nn import Tensor
            return Tensor(data.ds.labels[: len(oa)])

    assert accuracy(Oracle(), data) == 1.0
