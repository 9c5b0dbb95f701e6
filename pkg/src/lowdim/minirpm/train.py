"""Training and i.d / extrapolation evaluation on generated instances."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ValidationError
from ..nn import binary_cross_entropy_with_logits, cross_entropy, make_rng
from ..report import ExperimentReport
from ..training import ModelHooks, TrainConfig, fit
from .generate import GridSpec, RpmBatch, generate_dataset, stack_instances
from ..objcomp.models import pretrain_encoder
from .models import PanelEncoder, RelationStack, build_rpm_model, panel_features, random_panels


@dataclass
class MiniRpmConfig:
    n_train: int = 10000
    n_test: int = 2000
    n_id: int = 2000
    max_rules: int = 1
    width_mult: float = 1 / 16
    num_proj: int | None = None
    aux_head: bool = False
    aux_weight: float = 1.0
    pretrain: bool = True
    pretrain_samples: int = 20000
    pretrain_epochs: int = 5
    train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=30, batch_size=128))

    def __post_init__(self):
        if min(self.n_train, self.n_test, self.n_id) < 1:
            raise ValidationError("dataset sizes must be positive")


@dataclass
class RpmSplits:
    train: RpmBatch
    iid: RpmBatch
    ood: RpmBatch


def make_rpm_splits(cfg: MiniRpmConfig, seed: int, spec: GridSpec | None = None) -> RpmSplits:
    gen = lambda n, split, tag: stack_instances(
        generate_dataset(n, split, make_rng(seed, "minirpm", tag), cfg.max_rules, spec))
    return RpmSplits(gen(cfg.n_train, "train", "train"), gen(cfg.n_id, "train", "iid"), gen(cfg.n_test, "test", "test"))


def pretrained_panel_encoder_state(cfg: MiniRpmConfig, seed: int, spec: GridSpec | None = None) -> dict:
    """Panel-encoder weights after autoencoding panels drawn from the full (untruncated) grids."""
    encoder = PanelEncoder(make_rng(seed, "minirpm", "encoder"))
    panels = random_panels(make_rng(seed, "minirpm", "pretrain-data"), cfg.pretrain_samples, spec)
    pretrain_encoder(encoder, panel_features(panels, spec), epochs=cfg.pretrain_epochs, cfg=cfg.train, seed=seed)
    return encoder.state_dict()


def rpm_accuracy(model: RelationStack, batch: RpmBatch, chunk: int = 500) -> float:
    hits = 0
    for lo in range(0, len(batch), chunk):
        sub = batch.subset(np.arange(lo, min(lo + chunk, len(batch))))
        logits, _ = model(sub)
        hits += int((logits.data.argmax(axis=1) == sub.answer).sum())
    return hits / len(batch)


def rpm_loss(model: RelationStack, batch: RpmBatch, aux_weight: float = 1.0):
    logits, rule_logits = model(batch)
    loss = cross_entropy(logits, np.eye(8)[batch.answer])
    if rule_logits is not None:
        loss = loss + aux_weight * binary_cross_entropy_with_logits(rule_logits, batch.meta)
    return loss


def train_minirpm_once(kind: str, cfg: MiniRpmConfig, seed: int, splits: RpmSplits | None = None,
                       hooks: ModelHooks | None = None, encoder_state: dict | None = None) -> dict:
    splits = splits or make_rpm_splits(cfg, seed)
    model = build_rpm_model(kind, make_rng(seed, "minirpm", "init", kind), width_mult=cfg.width_mult,
                            num_proj=cfg.num_proj, aux_head=cfg.aux_head)
    if encoder_state is None and cfg.pretrain:
        encoder_state = pretrained_panel_encoder_state(cfg, seed)
    if encoder_state is not None:
        model.encoder.load_state_dict(encoder_state)
    hooks = hooks or ModelHooks()
    tag = f"minirpm-{kind}-k{getattr(model, 'num_proj', 0)}-seed{seed}"
    hooks.built(model, tag)
    fit(model, len(splits.train), lambda idx: rpm_loss(model, splits.train.subset(idx), cfg.aux_weight),
        cfg.train, make_rng(seed, "minirpm", "shuffle", kind))
    hooks.fitted(model, tag)
    return {
        "model": kind,
        "num_proj": getattr(model, "num_proj", 0),
        "seed": seed,
        "id_acc": rpm_accuracy(model, splits.iid),
        "ood_acc": rpm_accuracy(model, splits.ood),
    }


def train_and_eval_minirpm(kinds: str | Sequence[str], cfg: MiniRpmConfig | None = None,
                           seeds: Sequence[int] = (0,), hooks: ModelHooks | None = None) -> ExperimentReport:
    """Paired runs: every kind sees the same instances and pretrained encoder for a given seed."""
    cfg = cfg or MiniRpmConfig()
    kinds = [kinds] if isinstance(kinds, str) else list(kinds)
    report = ExperimentReport("minirpm", {"models": kinds, "seeds": list(seeds), "config": asdict(cfg)})
    t0 = time.perf_counter()
    for s in seeds:
        splits = make_rpm_splits(cfg, s)
        state = pretrained_panel_encoder_state(cfg, s) if cfg.pretrain else None
        for kind in kinds:
            report.add(**train_minirpm_once(kind, cfg, s, splits, hooks, state))
    report.wall_clock = time.perf_counter() - t0
    return report
