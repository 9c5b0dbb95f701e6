"""Shared encoders, the projection-comparator pair classifier and the MLP baseline."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..comparator import ComparatorModule, DistanceMode
from ..errors import DimensionError, ValidationError
from ..nn import Conv2d, Dense, Mlp, Module, Tensor, concat, make_rng, mse, softmax
from ..nn.tensor import as_tensor
from ..training import TrainConfig, fit

EMBED_DIM = 10


class MlpEncoder(Module):
    """Flat feature vector -> ``[obs_dim, 256, 10]`` relu MLP with a linear embedding."""

    def __init__(self, rng: np.random.Generator, obs_dim: int, hidden: int = 256, embed_dim: int = EMBED_DIM):
        self.obs_shape = (obs_dim,)
        self.embed_dim = embed_dim
        self.net = Mlp(rng, [obs_dim, hidden, embed_dim])

    def forward(self, obs) -> Tensor:
        obs = as_tensor(obs)
        if obs.shape[1:] != self.obs_shape:
            raise DimensionError(f"encoder expects [B, {self.obs_shape[0]}], got {obs.shape}")
        return self.net(obs)


class ConvEncoder(Module):
    """Four stride-2 3x3 convs (32-32-64-64, pad 1), then ``256 -> 10``."""

    def __init__(self, rng: np.random.Generator, image_size: int = 32, channels: Sequence[int] = (32, 32, 64, 64),
                 hidden: int = 256, embed_dim: int = EMBED_DIM):
        self.obs_shape = (1, image_size, image_size)
        self.embed_dim = embed_dim
        chans = [1, *channels]
        self.convs = [Conv2d(rng, a, b, 3, stride=2, padding=1) for a, b in zip(chans[:-1], chans[1:])]
        h = w = image_size
        for c in self.convs:
            h, w = c.out_hw(h, w)
        self.flat_dim = chans[-1] * h * w
        self.head = Mlp(rng, [self.flat_dim, hidden, embed_dim])

    def forward(self, obs) -> Tensor:
        x = as_tensor(obs)
        if x.shape[1:] != self.obs_shape:
            raise DimensionError(f"encoder expects [B, *{self.obs_shape}], got {x.shape}")
        for c in self.convs:
            x = c(x)
        return self.head(x.reshape(x.shape[0], self.flat_dim))


def build_encoder(rng: np.random.Generator, obs_shape: tuple[int, ...]) -> Module:
    if len(obs_shape) == 1:
        return MlpEncoder(rng, obs_shape[0])
    if len(obs_shape) == 3 and obs_shape[0] == 1 and obs_shape[1] == obs_shape[2]:
        return ConvEncoder(rng, obs_shape[1])
    raise ValidationError(f"no encoder for observation shape {obs_shape}")


class PairModel(Module):
    encoder: Module

    def logits(self, obs_a, obs_b) -> Tensor:
        raise NotImplementedError

    def encode_pair(self, obs_a, obs_b) -> tuple[Tensor, Tensor]:
        """Both observations go through one encoder call, so parameters are shared."""
        obs_a, obs_b = np.asarray(obs_a), np.asarray(obs_b)
        if obs_a.shape != obs_b.shape:
            raise DimensionError(f"pair observations differ in shape: {obs_a.shape} vs {obs_b.shape}")
        e = self.encoder(np.concatenate([obs_a, obs_b], axis=0))
        n = len(obs_a)
        return e[:n], e[n:]

    def forward(self, obs_a, obs_b) -> Tensor:
        return self.logits(obs_a, obs_b)

    def predict_proba(self, obs_a, obs_b) -> np.ndarray:
        return softmax(self.logits(obs_a, obs_b), axis=-1).data


class PairComparisonModel(PairModel):
    """``c(p(e_a) - p(e_b))`` with ``p`` affine to ``proj_dim`` and ``c`` an ``[d, h, 3]`` MLP."""

    def __init__(self, rng: np.random.Generator, encoder: Module, proj_dim: int = 1, hidden: int = 4,
                 num_heads: int = 1, mode: DistanceMode | str = DistanceMode.VECTOR_DIFF):
        self.encoder = encoder
        self.comparator = ComparatorModule(rng, encoder.embed_dim, num_heads=num_heads, proj_dim=proj_dim,
                                           mode=mode, head_hidden=[hidden], head_out=3,
                                           combiner=None if num_heads == 1 else [3])

    def logits(self, obs_a, obs_b) -> Tensor:
        ea, eb = self.encode_pair(obs_a, obs_b)
        return self.comparator(ea, eb)


class BaselineMlpModel(PairModel):
    """Concatenated embeddings through a ``[2*embed, 64, 64, 3]`` MLP."""

    def __init__(self, rng: np.random.Generator, encoder: Module, hidden: Sequence[int] = (64, 64)):
        self.encoder = encoder
        self.head = Mlp(rng, [2 * encoder.embed_dim, *hidden, 3])

    def logits(self, obs_a, obs_b) -> Tensor:
        ea, eb = self.encode_pair(obs_a, obs_b)
        return self.head(concat([ea, eb], axis=-1))


PAIR_MODEL_KINDS = ("comparator", "baseline")


def build_pair_model(kind: str, rng: np.random.Generator, encoder: Module, **kw) -> PairModel:
    if kind == "comparator":
        return PairComparisonModel(rng, encoder, **kw)
    if kind == "baseline":
        return BaselineMlpModel(rng, encoder, **kw)
    raise ValidationError(f"unknown pair model {kind!r}; choose from {PAIR_MODEL_KINDS}")


def pair_forward(model: PairModel, obs_a, obs_b) -> np.ndarray:
    """3-way (less, equal, greater) probabilities for each pair."""
    return model.predict_proba(obs_a, obs_b)


class Decoder(Module):
    """Mirror of the encoder used only during pretraining."""

    def __init__(self, rng: np.random.Generator, embed_dim: int, obs_shape: tuple[int, ...], hidden: int = 256):
        self.obs_shape = obs_shape
        self.net = Mlp(rng, [embed_dim, hidden, int(np.prod(obs_shape))])

    def forward(self, e) -> Tensor:
        out = self.net(e)
        return out.reshape(out.shape[0], *self.obs_shape)


def pretrain_encoder(encoder: Module, observations: np.ndarray, epochs: int = 5, cfg: TrainConfig | None = None,
                     seed: int = 0, val_observations: np.ndarray | None = None,
                     enabled: bool = True) -> list[float]:
    """Autoencoder pretraining; updates ``encoder`` in place, discards the decoder.

    Returns the reconstruction MSE on ``val_observations`` (or the training
    set) before training and after each epoch. ``enabled=False`` returns
    ``[]`` and leaves the encoder untouched.
    """
    if not enabled or epochs <= 0:
        return []
    cfg = cfg or TrainConfig()
    obs = np.asarray(observations, dtype=np.float64)
    val = obs[:1000] if val_observations is None else np.asarray(val_observations, dtype=np.float64)
    decoder = Decoder(make_rng(seed, "pretrain", "decoder"), encoder.embed_dim, encoder.obs_shape)

    class _AE(Module):
        def __init__(self):
            self.encoder, self.decoder = encoder, decoder

    ae = _AE()

    def recon(x) -> Tensor:
        return mse(decoder(encoder(x)), x)

    def val_loss() -> float:
        return float(np.mean([recon(val[i:i + 500]).data for i in range(0, len(val), 500)]))

    history = [val_loss()]
    run = TrainConfig(epochs=epochs, batch_size=cfg.batch_size, lr=cfg.lr, betas=cfg.betas, clip_norm=cfg.clip_norm)
    fit(ae, len(obs), lambda idx: recon(obs[idx]), run, make_rng(seed, "pretrain", "shuffle"),
        on_epoch=lambda ep, loss: history.append(val_loss()))
    return history
