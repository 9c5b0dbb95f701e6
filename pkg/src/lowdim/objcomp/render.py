"""Synthetic observations of single objects.

Two observation kinds over the same latent grids:

* ``image``: a grayscale ``H x W`` rendering of a square, ellipse or heart
  whose extent follows the size latent and whose centroid follows the
  position latents; pixel values are multiplied by the colour intensity.
* ``features``: a fixed random two-layer tanh network applied to the
  normalised latents, giving a flat vector. Much cheaper to learn from.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..nn import make_rng
from .latents import LatentSpec

SHAPES = ("square", "ellipse", "heart")


def _shape_mask(shape_idx: np.ndarray, dx: np.ndarray, dy: np.ndarray, r: np.ndarray) -> np.ndarray:
    u, v = dx / r, dy / r
    square = (np.abs(u) <= 0.85) & (np.abs(v) <= 0.85)
    ellipse = u**2 + (v / 0.6) ** 2 <= 1.0
    # heart curve (x^2+y^2-1)^3 - x^2 y^3 <= 0, y pointing up
    hx, hy = u * 1.15, -v * 1.15 + 0.15
    heart = (hx**2 + hy**2 - 1.0) ** 3 - hx**2 * hy**3 <= 0.0
    return np.where(shape_idx == 0, square, np.where(shape_idx == 1, ellipse, heart))


@dataclass(frozen=True)
class ObservationModel:
    kind: str = "features"
    spec: LatentSpec = LatentSpec()
    image_size: int = 32
    feature_dim: int = 32
    feature_hidden: int = 64
    feature_gain: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("features", "image"):
            raise ValidationError(f"observation kind must be features or image, got {self.kind!r}")

    @property
    def obs_shape(self) -> tuple[int, ...]:
        if self.kind == "image":
            return (1, self.image_size, self.image_size)
        return (self.feature_dim,)

    def normalised(self, latents: np.ndarray) -> np.ndarray:
        """Shape one-hot, then size/x/y scaled to [0,1], then colour intensity."""
        lat = np.asarray(latents)
        sp = self.spec
        onehot = np.eye(sp.shape)[lat[:, 0]]
        size = lat[:, 1] / (sp.size - 1)
        x = lat[:, 2] / (sp.x - 1)
        y = lat[:, 3] / (sp.y - 1)
        colour = sp.values("colour")[lat[:, 4]]
        return np.column_stack([onehot, size, x, y, colour])

    def _feature_weights(self) -> tuple[np.ndarray, ...]:
        rng = make_rng(self.seed, "renderer", "features")
        n_in = self.spec.shape + 4
        w1 = rng.normal(0.0, self.feature_gain / np.sqrt(n_in), size=(n_in, self.feature_hidden))
        b1 = rng.normal(0.0, 0.5, size=self.feature_hidden)
        w2 = rng.normal(0.0, 1.0 / np.sqrt(self.feature_hidden), size=(self.feature_hidden, self.feature_dim))
        b2 = rng.normal(0.0, 0.1, size=self.feature_dim)
        return w1, b1, w2, b2

    def features(self, latents: np.ndarray) -> np.ndarray:
        w1, b1, w2, b2 = self._feature_weights()
        h = np.tanh(self.normalised(latents) @ w1 + b1)
        return np.tanh(h @ w2 + b2)

    def images(self, latents: np.ndarray) -> np.ndarray:
        lat = np.asarray(latents)
        sp, W = self.spec, self.image_size
        r_max = 0.19 * W
        r = r_max * (0.5 + 0.5 * lat[:, 1] / (sp.size - 1))
        margin = r_max + 0.5
        cx = margin + lat[:, 2] / (sp.x - 1) * (W - 2 * margin)
        cy = margin + lat[:, 3] / (sp.y - 1) * (W - 2 * margin)
        grid = np.arange(W) + 0.5
        dx = grid[None, None, :] - cx[:, None, None]
        dy = grid[None, :, None] - cy[:, None, None]
        mask = _shape_mask(lat[:, 0, None, None], dx, dy, r[:, None, None])
        colour = sp.values("colour")[lat[:, 4]]
        return (mask * colour[:, None, None])[:, None, :, :].astype(np.float64)

    def render(self, latents: np.ndarray) -> np.ndarray:
        latents = np.asarray(latents, dtype=np.int64)
        if latents.ndim == 1:
            latents = latents[None, :]
        self.spec.check(latents)
        return self.images(latents) if self.kind == "image" else self.features(latents)


def render_observation(latents, model: ObservationModel | None = None) -> np.ndarray:
    """Render one latent row (or a batch of rows) into observations."""
    model = model or ObservationModel()
    lat = np.asarray(latents, dtype=np.int64)
    out = model.render(lat)
    return out[0] if lat.ndim == 1 else out
