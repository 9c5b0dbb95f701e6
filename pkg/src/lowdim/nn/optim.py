"""Rectified Adam."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..errors import DimensionError, ValidationError
from .tensor import Tensor


def rho_inf(beta2: float) -> float:
    return 2.0 / (1.0 - beta2) - 1.0


class RAdam:
    """Adam whose adaptive step is scaled by a variance-rectification factor.

    While the approximated SMA length ``rho_t`` is at most 4 the variance of
    the adaptive learning rate is intractable and a plain bias-corrected
    momentum step is taken instead.
    """

    def __init__(self, params: Sequence[Tensor], lr: float = 1e-3,
                 betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        b1, b2 = betas
        if not (0 < b1 < 1 and 0 < b2 < 1):
            raise ValidationError(f"betas must lie in (0,1), got {betas}")
        if lr <= 0:
            raise ValidationError(f"lr must be positive, got {lr}")
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, b1, b2, eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]
        self.rho_inf = rho_inf(b2)

    def zero_grad(self) -> None:
        for p in self.params:
            p.grad = None

    def step_size(self) -> tuple[float, bool]:
        """Scalar multiplier for ``m_hat`` (and whether the adaptive term is used) at step t."""
        t, b1, b2 = self.t, self.beta1, self.beta2
        b2t = b2**t
        rho_t = self.rho_inf - 2.0 * t * b2t / (1.0 - b2t)
        if rho_t > 4.0:
            r = math.sqrt(
                (rho_t - 4.0) * (rho_t - 2.0) * self.rho_inf
                / ((self.rho_inf - 4.0) * (self.rho_inf - 2.0) * rho_t)
            )
            return self.lr * r / (1.0 - b1**t), True
        return self.lr / (1.0 - b1**t), False

    def step(self, grads: Sequence[np.ndarray] | None = None) -> None:
        if grads is None:
            grads = [p.grad for p in self.params]
        if len(grads) != len(self.params):
            raise DimensionError("one gradient per parameter required")
        self.t += 1
        scale, adaptive = self.step_size()
        bc2 = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            if g is None:
                g = np.zeros_like(p.data)
            elif g.shape != p.data.shape:
                raise DimensionError(f"grad shape {g.shape} != param shape {p.data.shape}")
            if p.mask is not None:
                g = g * p.mask
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            if adaptive:
                p.data = p.data - scale * m / (np.sqrt(v / bc2) + self.eps)
            else:
                p.data = p.data - scale * m
            if p.mask is not None:
                p.data = p.data * p.mask


def radam_step(state: RAdam, params: Sequence[Tensor], grads: Sequence[np.ndarray]) -> list[Tensor]:
    if [id(p) for p in params] != [id(p) for p in state.params]:
        raise ValidationError("params do not match the optimizer state")
    state.step(grads)
    return list(params)
