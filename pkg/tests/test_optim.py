import math

import numpy as np
import pytest

from lowdim.errors import DimensionError, ValidationError
from lowdim.nn import RAdam, parameter, radam_step, rho_inf


def reference_radam(theta, grads, lr=1e-3, b1=0.9, b2=0.999, eps=1e-8):
    """Scalar-loop RAdam written straight from the published update rule."""
    theta = np.array(theta, dtype=float)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    r_inf = 2 / (1 - b2) - 1
    out = []
    for t, g in enumerate(grads, start=1):
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1 ** t)
        r_t = r_inf - 2 * t * b2 ** t / (1 - b2 ** t)
        if r_t > 4:
            v_hat = np.sqrt(v / (1 - b2 ** t))
            r = math.sqrt((r_t - 4) * (r_t - 2) * r_inf / ((r_inf - 4) * (r_inf - 2) * r_t))
            theta = theta - lr * r * m_hat / (v_hat + eps)
        else:
            theta = theta - lr * m_hat
        out.append(theta.copy())
    return out


def test_matches_reference_over_warmup_and_beyond(rng):
    p = parameter(rng.normal(size=(3, 2)))
    grads = [rng.normal(size=(3, 2)) for _ in range(12)]
    expected = reference_radam(p.data, grads, lr=0.01)
    opt = RAdam([p], lr=0.01)
    for g, want in zip(grads, expected):
        opt.step([g])
        np.testing.assert_allclose(p.data, want, rtol=0, atol=1e-13)


def test_first_steps_are_unrectified():
    opt = RAdam([parameter(np.zeros(1))])
    adaptive = []
    for _ in range(6):
        opt.t += 1
        adaptive.append(opt.step_size()[1])
    # rho_t first exceeds 4 at t = 5 for beta2 = 0.999
    assert adaptive == [False, False, False, False, True, True]
    assert rho_inf(0.999) == pytest.approx(1999.0)


def test_mask_freezes_pruned_entries(rng):
    p = parameter(rng.normal(size=4))
    p.mask = np.array([True, False, True, False])
    p.data = p.data * p.mask
    opt = RAdam([p], lr=0.1)
    for _ in range(8):
        opt.step([np.ones(4)])
    assert np.all(p.data[~p.mask] == 0)


def test_rejects_bad_arguments(rng):
    p = parameter(np.zeros(2))
    with pytest.raises(ValidationError):
        RAdam([p], betas=(1.0, 0.9))
    with pytest.raises(ValidationError):
        RAdam([p], lr=0.0)
    opt = RAdam([p])
    with pytest.raises(DimensionError):
        opt.step([np.zeros(3)])
    with pytest.raises(DimensionError):
        opt.step([])
    with pytest.raises(ValidationError):
        radam_step(opt, [parameter(np.zeros(2))], [np.zeros(2)])


def test_minimises_a_quadratic():
    p = parameter(np.array([3.0, -2.0]))
    opt = RAdam([p], lr=0.05)
    for _ in range(2000):
        opt.step([2 * p.data])
    assert np.abs(p.data).max() < 1e-2
