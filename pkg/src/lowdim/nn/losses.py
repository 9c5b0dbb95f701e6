from __future__ import annotations

import numpy as np

from ..errors import DimensionError, ValidationError
from .tensor import Tensor, as_tensor, log_softmax


def mse(pred, target) -> Tensor:
    pred, target = as_tensor(pred), as_tensor(target)
    if pred.shape != target.shape:
        raise DimensionError(f"mse shapes differ: {pred.shape} vs {target.shape}")
    d = pred - target
    return (d * d).mean()


def _check_onehot(onehot: np.ndarray) -> None:
    ok = np.isin(onehot, (0.0, 1.0)).all() and np.all(onehot.sum(axis=-1) == 1.0)
    if not ok:
        raise ValidationError("labels must be one-hot rows (0/1 entries summing to 1)")


def cross_entropy(logits, onehot) -> Tensor:
    """Mean of ``-log softmax(logits)[label]`` over rows."""
    logits = as_tensor(logits)
    onehot = np.asarray(onehot.data if isinstance(onehot, Tensor) else onehot, dtype=np.float64)
    if logits.shape != onehot.shape:
        raise DimensionError(f"cross_entropy shapes differ: {logits.shape} vs {onehot.shape}")
    _check_onehot(onehot)
    logp = log_softmax(logits, axis=-1)
    rows = onehot.size // onehot.shape[-1]
    return -(logp * Tensor(onehot)).sum() * (1.0 / rows)


def binary_cross_entropy_with_logits(logits, targets) -> Tensor:
    """Mean elementwise BCE; ``targets`` in {0,1}."""
    logits = as_tensor(logits)
    t = np.asarray(targets, dtype=np.float64)
    if logits.shape != t.shape:
        raise DimensionError(f"bce shapes differ: {logits.shape} vs {t.shape}")
    # log(1+exp(z)) - t*z, computed stably as relu(z) + log(1+exp(-|z|)) - t*z
    z = logits
    soft = z.relu() + ((-(z.abs())).exp() + 1.0).log()
    return (soft - z * Tensor(t)).mean()
