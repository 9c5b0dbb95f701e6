"""Training and i.d / o.o.d evaluation of the pair classifiers."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ValidationError
from ..nn import cross_entropy, make_rng
from ..report import ExperimentReport
from ..training import ModelHooks, TrainConfig, fit
from .data import ComparisonDataset, generate_comparison_dataset, sample_pairs, split_samplers
from .latents import LatentSampler, canonical_attr
from .models import PairModel, build_encoder, build_pair_model, pretrain_encoder
from .render import ObservationModel


@dataclass
class ObjCompConfig:
    """Everything except the model kind, attribute and seed."""

    n_train: int = 20000
    n_test: int = 5000
    n_id: int = 5000
    observation: str = "features"
    image_size: int = 32
    train_window: tuple[float, float] = (0.0, 0.6)
    proj_dim: int = 1
    num_heads: int = 1
    comparator_hidden: int = 4
    pretrain: bool = True
    pretrain_samples: int = 20000
    pretrain_epochs: int = 5
    renderer_seed: int = 0
    feature_gain: float = 2.0
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if min(self.n_train, self.n_test, self.n_id) < 1:
            raise ValidationError("dataset sizes must be positive")
        if self.proj_dim < 1 or self.num_heads < 1:
            raise ValidationError("proj_dim and num_heads must be >= 1")

    def observation_model(self) -> ObservationModel:
        return ObservationModel(kind=self.observation, image_size=self.image_size, seed=self.renderer_seed,
                                feature_gain=self.feature_gain)


@dataclass
class ObjCompSplits:
    train: ComparisonDataset
    iid: ComparisonDataset  # fresh pairs from the training window
    ood: ComparisonDataset  # pairs from the held-out upper window


def make_splits(attr: str, cfg: ObjCompConfig, seed: int) -> ObjCompSplits:
    attr = canonical_attr(attr)
    rng = make_rng(seed, "objcomp", "data", attr)
    train, ood = generate_comparison_dataset(attr, cfg.n_train, cfg.n_test, rng, train_window=cfg.train_window)
    train_s, _ = split_samplers(attr, train_window=cfg.train_window)
    iid = sample_pairs(train_s, attr, cfg.n_id, make_rng(seed, "objcomp", "iid", attr), "iid")
    return ObjCompSplits(train, iid, ood)


def pretrained_encoder_state(cfg: ObjCompConfig, seed: int) -> dict:
    """Encoder weights after autoencoding observations from the full latent grids."""
    obs_model = cfg.observation_model()
    encoder = build_encoder(make_rng(seed, "objcomp", "encoder"), obs_model.obs_shape)
    if cfg.pretrain:
        lat = LatentSampler(obs_model.spec).sample(make_rng(seed, "objcomp", "pretrain-data"), cfg.pretrain_samples)
        pretrain_encoder(encoder, obs_model.render(lat), epochs=cfg.pretrain_epochs, cfg=cfg.train, seed=seed)
    return encoder.state_dict()


class PairData:
    """Observations rendered once per split so training does not re-render per batch."""

    def __init__(self, ds: ComparisonDataset, obs_model: ObservationModel):
        self.ds = ds
        self.obs_a = obs_model.render(ds.lat_a)
        self.obs_b = obs_model.render(ds.lat_b)

    def __len__(self) -> int:
        return len(self.ds)


def accuracy(model: PairModel, data: PairData, chunk: int = 1000) -> float:
    hits = 0
    truth = data.ds.label_index()
    for lo in range(0, len(data), chunk):
        sl = slice(lo, lo + chunk)
        pred = model.logits(data.obs_a[sl], data.obs_b[sl]).data.argmax(axis=1)
        hits += int((pred == truth[sl]).sum())
    return hits / len(data)


def build_model(kind: str, cfg: ObjCompConfig, seed: int, encoder_state: dict | None) -> PairModel:
    obs_model = cfg.observation_model()
    encoder = build_encoder(make_rng(seed, "objcomp", "encoder"), obs_model.obs_shape)
    if encoder_state is not None:
        encoder.load_state_dict(encoder_state)
    kw = {}
    if kind == "comparator":
        kw = dict(proj_dim=cfg.proj_dim, hidden=cfg.comparator_hidden, num_heads=cfg.num_heads)
    return build_pair_model(kind, make_rng(seed, "objcomp", "head", kind), encoder, **kw)


def train_pair_model(kind: str, train: PairData, cfg: ObjCompConfig, seed: int,
                     encoder_state: dict | None = None, hooks: ModelHooks | None = None,
                     tag: str | None = None) -> PairModel:
    model = build_model(kind, cfg, seed, encoder_state)
    hooks = hooks or ModelHooks()
    tag = tag or f"objcomp-{kind}-{train.ds.attr}-seed{seed}"
    hooks.built(model, tag)
    labels = train.ds.labels

    def loss_on(idx):
        return cross_entropy(model(train.obs_a[idx], train.obs_b[idx]), labels[idx])

    fit(model, len(train), loss_on, cfg.train, make_rng(seed, "objcomp", "shuffle", kind))
    hooks.fitted(model, tag)
    return model


def train_objcomp_once(kind: str, attr: str, cfg: ObjCompConfig, seed: int,
                       encoder_state: dict | None = None, splits: ObjCompSplits | None = None,
                       hooks: ModelHooks | None = None) -> dict:
    attr = canonical_attr(attr)
    obs_model = cfg.observation_model()
    splits = splits or make_splits(attr, cfg, seed)
    if encoder_state is None and cfg.pretrain:
        encoder_state = pretrained_encoder_state(cfg, seed)
    model = train_pair_model(kind, PairData(splits.train, obs_model), cfg, seed, encoder_state, hooks)
    return {
        "model": kind,
        "attr": attr,
        "seed": seed,
        "id_acc": accuracy(model, PairData(splits.iid, obs_model)),
        "ood_acc": accuracy(model, PairData(splits.ood, obs_model)),
    }


def train_and_eval_objcomp(kinds: str | Sequence[str], attrs: str | Sequence[str], cfg: ObjCompConfig | None = None,
                           seeds: Sequence[int] = (0,), hooks: ModelHooks | None = None) -> ExperimentReport:
    """Every (kind, attr, seed) cell; the pretrained encoder is shared across cells of a seed."""
    cfg = cfg or ObjCompConfig()
    kinds = [kinds] if isinstance(kinds, str) else list(kinds)
    attrs = [canonical_attr(a) for a in ([attrs] if isinstance(attrs, str) else attrs)]
    report = ExperimentReport("objcomp", {"models": kinds, "attrs": attrs, "seeds": list(seeds),
                                          "config": asdict(cfg)})
    t0 = time.perf_counter()
    for s in seeds:
        state = pretrained_encoder_state(cfg, s) if cfg.pretrain else None
        for attr in attrs:
            splits = make_splits(attr, cfg, s)
            for kind in kinds:
                report.add(**train_objcomp_once(kind, attr, cfg, s, state, splits, hooks))
    report.wall_clock = time.perf_counter() - t0
    return report


__all__ = [
    "ObjCompConfig", "ObjCompSplits", "PairData", "accuracy", "build_model", "make_splits",
    "pretrained_encoder_state", "train_and_eval_objcomp", "train_objcomp_once", "train_pair_model",
]
