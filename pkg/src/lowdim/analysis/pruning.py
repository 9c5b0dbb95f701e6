"""Magnitude pruning of layer weights, with masks the optimiser respects."""
from __future__ import annotations

import copy
import math

import numpy as np

from ..errors import ValidationError
from ..nn import Conv2d, Dense, Module


def prunable(model: Module) -> list:
    """Weight tensors of every Dense/Conv2d layer (biases are left dense)."""
    return [m.weight for m in model.modules() if isinstance(m, (Dense, Conv2d))]


def magnitude_prune(model: Module, keep_fraction: float, copy_model: bool = True) -> Module:
    """Keep the ``ceil(keep_fraction * n)`` largest-magnitude entries of each weight tensor.

    The rest are zeroed and masked, so later optimiser steps hold them at
    zero. Ties are broken by flat index. With ``copy_model`` the input is
    left untouched.
    """
    if not 0.0 < keep_fraction <= 1.0:
        raise ValidationError(f"keep_fraction must lie in (0, 1], got {keep_fraction}")
    out = copy.deepcopy(model) if copy_model else model
    if keep_fraction == 1.0:
        return out
    for w in prunable(out):
        n = w.data.size
        keep = math.ceil(keep_fraction * n - 1e-9)
        order = np.argsort(-np.abs(w.data).ravel(), kind="stable")
        mask = np.zeros(n, dtype=bool)
        mask[order[:keep]] = True
        if w.mask is not None:
            mask &= w.mask.ravel()
        w.mask = mask.reshape(w.data.shape)
        w.data = w.data * w.mask
    return out


def sparsity(model: Module) -> float:
    """Fraction of zero entries over all prunable weights."""
    ws = prunable(model)
    total = sum(w.data.size for w in ws)
    return sum(int((w.data == 0).sum()) for w in ws) / max(total, 1)
