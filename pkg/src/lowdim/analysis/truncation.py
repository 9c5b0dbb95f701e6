"""Truncation ``T(D, beta, u)`` of a latent-grid distribution."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..objcomp.latents import LATENT_NAMES, LatentSampler, canonical_attr, window_indices

DIRECTIONS = ("lower", "upper")


@dataclass(frozen=True)
class TruncationSpec:
    """Keep the lower (default) ``beta`` fraction of each grid in ``dims``."""

    beta: float
    dims: tuple[str, ...]
    direction: str = "lower"

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValidationError(f"beta must lie in (0, 1), got {self.beta}")
        dims = (self.dims,) if isinstance(self.dims, str) else tuple(self.dims)
        if not dims:
            raise ValidationError("truncate at least one latent dimension")
        object.__setattr__(self, "dims", tuple(canonical_attr(d) for d in dims))
        if len(set(self.dims)) != len(self.dims):
            raise ValidationError(f"repeated dimension in {self.dims}")
        if self.direction not in DIRECTIONS:
            raise ValidationError(f"direction must be one of {DIRECTIONS}, got {self.direction!r}")

    def window(self, grid_size: int) -> np.ndarray:
        """Admitted grid indices; ``floor(beta * G)`` of them for the lower window."""
        if self.direction == "lower":
            return window_indices(grid_size, 0.0, self.beta)
        return window_indices(grid_size, 1.0 - self.beta, 1.0)

    def complement(self, grid_size: int) -> np.ndarray:
        return np.setdiff1d(np.arange(grid_size), self.window(grid_size))


def truncate_distribution(sampler: LatentSampler, spec: TruncationSpec) -> LatentSampler:
    """``sampler`` with every dimension in ``spec.dims`` restricted to its window.

    Restrictions already present on a truncated dimension are intersected
    with the window; the other dimensions are left as they are.
    """
    out = sampler
    for d in spec.dims:
        g = sampler.spec.grid_size(d)
        keep = np.intersect1d(sampler.support(d), spec.window(g))
        if len(keep) == 0:
            raise ValidationError(f"truncating {d!r} to beta={spec.beta} leaves no admissible values")
        out = out.restrict(d, keep)
    return out


def within_window(latents: np.ndarray, spec: TruncationSpec, sampler: LatentSampler) -> np.ndarray:
    """Row mask: every truncated coordinate lies inside its window."""
    latents = np.asarray(latents)
    ok = np.ones(len(latents), dtype=bool)
    for d in spec.dims:
        col = LATENT_NAMES.index(d)
        ok &= np.isin(latents[:, col], spec.window(sampler.spec.grid_size(d)))
    return ok
