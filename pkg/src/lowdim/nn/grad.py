from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..errors import DivergenceError, StateError
from .tensor import Tensor


def backward(loss: Tensor | None, params: Sequence[Tensor]) -> list[np.ndarray]:
    """Gradient of the scalar ``loss`` for each of ``params`` (zeros where unreachable)."""
    if loss is None:
        raise StateError("backward called before a forward pass produced a loss")
    for p in params:
        p.grad = None
    loss.backward()
    return [np.zeros_like(p.data) if p.grad is None else p.grad for p in params]


def check_finite(loss: Tensor, where: str = "") -> float:
    value = float(loss.data)
    if not np.isfinite(value):
        raise DivergenceError(f"non-finite loss {value}{' in ' + where if where else ''}")
    return value


def numeric_grad(f: Callable[[], float], p: Tensor, h: float = 1e-5,
                 index: Sequence[tuple[int, ...]] | None = None) -> np.ndarray:
    out = np.zeros_like(p.data)
    idxs = index if index is not None else list(np.ndindex(p.shape))
    for ix in idxs:
        old = p.data[ix]
        p.data[ix] = old + h
        fp = f()
        p.data[ix] = old - h
        fm = f()
        p.data[ix] = old
        out[ix] = (fp - fm) / (2 * h)
    return out


def max_relative_error(loss_fn: Callable[[], Tensor], params: Sequence[Tensor], h: float = 1e-5,
                       floor: float = 1e-6, max_entries: int | None = None,
                       rng: np.random.Generator | None = None) -> float:
    """Largest ``|analytic - central difference| / max(|a|, |n|, floor)`` over entries.

    ``max_entries`` caps the entries checked per tensor (sampled with ``rng``).
    """
    analytic = backward(loss_fn(), params)

    def f() -> float:
        return float(loss_fn().data)

    worst = 0.0
    for p, a in zip(params, analytic):
        idxs = list(np.ndindex(p.shape))
        if max_entries is not None and len(idxs) > max_entries:
            rng = rng or np.random.default_rng(0)
            pick = rng.choice(len(idxs), size=max_entries, replace=False)
            idxs = [idxs[i] for i in pick]
        n = numeric_grad(f, p, h, idxs)
        for ix in idxs:
            den = max(abs(a[ix]), abs(n[ix]), floor)
            worst = max(worst, abs(a[ix] - n[ix]) / den)
    return worst
