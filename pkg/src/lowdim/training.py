"""Mini-batch training loop shared by the tasks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .nn import RAdam, Tensor, check_finite
from .nn.layers import Module


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 64
    lr: float = 1e-3
    betas: tuple[float, float] = (0.9, 0.999)
    # global grad-norm cap; bounds the un-rectified warm-up steps on raw-scale inputs
    clip_norm: float | None = 1.0


@dataclass
class TrainLog:
    epoch_loss: list[float] = field(default_factory=list)


def clip_grad_norm(params: Sequence[Tensor], max_norm: float) -> float:
    """Rescale all gradients jointly so their global L2 norm is at most ``max_norm``."""
    grads = [p.grad for p in params if p.grad is not None]
    norm = float(np.sqrt(sum(float((g * g).sum()) for g in grads)))
    if norm > max_norm:
        scale = max_norm / norm
        for p in params:
            if p.grad is not None:
                p.grad = p.grad * scale
    return norm


def fit(model: Module, n_items: int, loss_on: Callable[[np.ndarray], Tensor], cfg: TrainConfig,
        rng: np.random.Generator, params: Sequence[Tensor] | None = None,
        on_epoch: Callable[[int, float], None] | None = None) -> TrainLog:
    """Shuffle ``range(n_items)`` every epoch and take one RAdam step per batch.

    ``loss_on(idx)`` builds the scalar loss for the index batch ``idx``.
    A non-finite loss raises :class:`DivergenceError`.
    """
    params = list(params) if params is not None else model.parameters()
    opt = RAdam(params, lr=cfg.lr, betas=cfg.betas)
    log = TrainLog()
    for epoch in range(cfg.epochs):
        order = rng.permutation(n_items)
        total, count = 0.0, 0
        for lo in range(0, n_items, cfg.batch_size):
            idx = order[lo : lo + cfg.batch_size]
            loss = loss_on(idx)
            value = check_finite(loss, f"epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            if cfg.clip_norm is not None:
                clip_grad_norm(params, cfg.clip_norm)
            opt.step()
            total += value * len(idx)
            count += len(idx)
        log.epoch_loss.append(total / max(count, 1))
        if on_epoch is not None:
            on_epoch(epoch, log.epoch_loss[-1])
    return log


@dataclass
class ModelHooks:
    """Callbacks around one training run; ``tag`` names the run (task, model, attribute, seed).

    ``after_build`` runs before the first step (e.g. to load saved
    parameters), ``after_fit`` after the last one (e.g. to save them).
    """

    after_build: Callable[[Module, str], None] | None = None
    after_fit: Callable[[Module, str], None] | None = None

    def built(self, model: Module, tag: str) -> None:
        if self.after_build is not None:
            self.after_build(model, tag)

    def fitted(self, model: Module, tag: str) -> None:
        if self.after_fit is not None:
            self.after_fit(model, tag)
