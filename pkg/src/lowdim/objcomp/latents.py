"""Discrete latent grids of single-object scenes and windowed sampling over them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError

# column order of a latent-index row
LATENT_NAMES = ("shape", "size", "x", "y", "colour")
COMPARABLE = ("size", "x", "colour")
ATTR_ALIASES = {"x-position": "x", "x_position": "x", "xpos": "x", "x-coord": "x", "color": "colour",
                "y-position": "y", "y_position": "y"}


def canonical_attr(name: str) -> str:
    key = name.lower()
    key = ATTR_ALIASES.get(key, key)
    if key not in LATENT_NAMES:
        raise ValidationError(f"unknown latent {name!r}")
    return key


@dataclass(frozen=True)
class LatentSpec:
    """Grid sizes per latent; colour index ``i`` means intensity ``(i+1)/10``."""

    shape: int = 3
    size: int = 6
    x: int = 32
    y: int = 32
    colour: int = 10

    def grid_size(self, name: str) -> int:
        return getattr(self, canonical_attr(name))

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(self.grid_size(n) for n in LATENT_NAMES)

    def values(self, name: str) -> np.ndarray:
        """Ground-truth value of every grid index of ``name``."""
        name = canonical_attr(name)
        n = self.grid_size(name)
        if name == "colour":
            return np.round(np.arange(1, n + 1) / n, 10)
        return np.arange(n, dtype=np.float64)

    def check(self, latents: np.ndarray) -> None:
        latents = np.asarray(latents)
        if latents.shape[-1] != len(LATENT_NAMES):
            raise ValidationError(f"latent rows need {len(LATENT_NAMES)} columns, got {latents.shape}")
        hi = np.array(self.sizes)
        if (latents < 0).any() or (latents >= hi).any():
            raise ValidationError("latent index outside its grid")


def window_indices(grid_size: int, lo: float, hi: float) -> np.ndarray:
    """Grid indices in the fractional window ``[floor(lo*G), floor(hi*G))``; ``hi=1`` keeps the top."""
    if not (0.0 <= lo < hi <= 1.0):
        raise ValidationError(f"window must satisfy 0 <= lo < hi <= 1, got ({lo}, {hi})")
    start = math.floor(lo * grid_size + 1e-9)
    stop = grid_size if hi >= 1.0 else math.floor(hi * grid_size + 1e-9)
    idx = np.arange(start, stop)
    if len(idx) == 0:
        raise ValidationError(f"window ({lo}, {hi}) is empty on a grid of {grid_size}")
    return idx


@dataclass
class LatentSampler:
    """Independent uniform draws, each latent restricted to an allowed index set."""

    spec: LatentSpec = field(default_factory=LatentSpec)
    allowed: dict[str, np.ndarray] = field(default_factory=dict)

    def support(self, name: str) -> np.ndarray:
        name = canonical_attr(name)
        if name in self.allowed:
            return self.allowed[name]
        return np.arange(self.spec.grid_size(name))

    def restrict(self, name: str, indices: np.ndarray) -> "LatentSampler":
        out = dict(self.allowed)
        out[canonical_attr(name)] = np.asarray(indices, dtype=np.int64)
        return LatentSampler(self.spec, out)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        cols = [rng.choice(self.support(name), size=n) for name in LATENT_NAMES]
        return np.stack(cols, axis=1).astype(np.int64)


def split_window(split: str, lo_hi: tuple[float, float] = (0.0, 0.6)) -> tuple[float, float]:
    """Train window is ``lo_hi``; the test window is everything above it."""
    if split == "train":
        return lo_hi
    if split == "test":
        return (lo_hi[1], 1.0)
    raise ValidationError(f"split must be train or test, got {split!r}")
