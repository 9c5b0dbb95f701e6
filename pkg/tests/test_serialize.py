import numpy as np
import pytest

from lowdim.errors import ValidationError
from lowdim.nn import Mlp, load_params, read_header, save_params


def test_round_trip_with_mask_and_meta(tmp_path, rng):
    a = Mlp(rng, [3, 4, 2])
    a.layers[0].weight.mask = rng.random((4, 3)) > 0.5
    path = save_params(tmp_path / "m.npz", a, {"task": "setmax", "seed": 3})
    b = Mlp(np.random.default_rng(99), [3, 4, 2])
    assert load_params(path, b) == {"task": "setmax", "seed": 3}
    for (n, p), (_, q) in zip(a.named_parameters(), b.named_parameters()):
        np.testing.assert_array_equal(p.data, q.data, err_msg=n)
    np.testing.assert_array_equal(b.layers[0].weight.mask, a.layers[0].weight.mask)
    assert b.layers[1].weight.mask is None
    assert read_header(path)["format"] == "lowdim-params"


def test_mismatches_raise(tmp_path, rng):
    path = save_params(tmp_path / "m.npz", Mlp(rng, [3, 4, 2]))
    with pytest.raises(ValidationError):
        load_params(path, Mlp(rng, [3, 5, 2]))
    with pytest.raises(ValidationError):
        load_params(path, Mlp(rng, [3, 4, 4, 2]))
    np.savez(tmp_path / "plain.npz", x=np.zeros(2))
    with pytest.raises(ValidationError):
        read_header(tmp_path / "plain.npz")
