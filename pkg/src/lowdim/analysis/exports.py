"""Plot data for projection scatters and comparator function landscapes (CSV only)."""
from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import ValidationError
from ..objcomp.latents import LATENT_NAMES, canonical_attr
from ..objcomp.render import ObservationModel

EQUAL = 1  # index of the "equal" unit in (less, equal, greater)


def write_records_csv(path: str | Path, records: Sequence[dict], columns: Sequence[str] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = list(columns) if columns is not None else (list(records[0]) if records else [])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in records:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in (r.get(c, "") for c in cols)])
    return path


def _coord_names(d: int) -> list[str]:
    return ["x", "y"][:d] if d <= 2 else [f"p{i}" for i in range(d)]


def export_projection_scatter(model, obs: np.ndarray, latents: np.ndarray, attr: str,
                              split: str | Sequence[str] = "train", head: int = 0) -> list[dict]:
    """One record per object: its projection ``p_head(e)`` and the ground-truth ``attr`` index."""
    attr = canonical_attr(attr)
    latents = np.asarray(latents)
    splits = [split] * len(latents) if isinstance(split, str) else list(split)
    if len(splits) != len(latents) or len(obs) != len(latents):
        raise ValidationError("obs, latents and split tags must have one entry per object")
    comp = model.comparator
    if not 0 <= head < comp.num_heads:
        raise ValidationError(f"head {head} out of range for {comp.num_heads} heads")
    coords = []
    for lo in range(0, len(obs), 1000):
        coords.append(comp.project(model.encoder(obs[lo:lo + 1000])).data[:, head, :])
    coords = np.concatenate(coords) if coords else np.zeros((0, comp.proj_dim))
    names = _coord_names(comp.proj_dim)
    col = LATENT_NAMES.index(attr)
    return [{**dict(zip(names, map(float, c))), "latent": int(lat[col]), "split": s}
            for c, lat, s in zip(coords, latents, splits)]


def scatter_columns(records: Sequence[dict]) -> list[str]:
    coords = [k for k in records[0] if k not in ("latent", "split")] if records else ["x", "y"]
    return [*coords, "latent", "split"]


def difference_grid(lo: float, hi: float, n: int, dim: int) -> np.ndarray:
    """Regular ``n``-point (per axis) grid over ``[lo, hi]^dim``; ``dim`` must be 1 or 2."""
    if dim not in (1, 2):
        raise ValidationError(f"landscapes are exported for 1-d or 2-d slices only, got d={dim}")
    if n < 2 or not hi > lo:
        raise ValidationError("grid needs n >= 2 and hi > lo")
    axis = np.linspace(lo, hi, n)
    if dim == 1:
        return axis[:, None]
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel()], axis=1)


def export_function_landscape(model, grid: np.ndarray, unit: int = EQUAL) -> list[dict]:
    """Pre-softmax ``unit`` logit of a one-head comparator at each difference ``grid[i]``."""
    comp = model.comparator
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 2 or grid.shape[1] != comp.proj_dim:
        raise ValidationError(f"grid must be [n, {comp.proj_dim}], got {grid.shape}")
    if comp.proj_dim > 2:
        raise ValidationError(f"landscapes are exported for 1-d or 2-d slices only, got d={comp.proj_dim}")
    if comp.num_heads != 1:
        raise ValidationError("difference-space landscapes need a single projection head")
    pi = grid.reshape(len(grid), 1, comp.proj_dim)
    logits = comp.compare_projected(pi, np.zeros_like(pi)).data
    names = _coord_names(comp.proj_dim)
    return [{**dict(zip(names, map(float, g))), "logit": float(v)} for g, v in zip(grid, logits[:, unit])]


def export_attribute_landscape(model, obs_model: ObservationModel, attr: str, base: np.ndarray | None = None,
                               unit: int = EQUAL) -> list[dict]:
    """``unit`` logit over every pair of ground-truth ``attr`` values, other latents fixed at ``base``.

    Works for any pair model (comparator or baseline).
    """
    attr = canonical_attr(attr)
    col = LATENT_NAMES.index(attr)
    g = obs_model.spec.grid_size(attr)
    base = np.zeros(len(LATENT_NAMES), dtype=np.int64) if base is None else np.asarray(base, dtype=np.int64)
    ia, ib = np.meshgrid(np.arange(g), np.arange(g), indexing="ij")
    lat_a = np.tile(base, (g * g, 1))
    lat_b = lat_a.copy()
    lat_a[:, col], lat_b[:, col] = ia.ravel(), ib.ravel()
    logits = model.logits(obs_model.render(lat_a), obs_model.render(lat_b)).data
    return [{"a": int(a), "b": int(b), "logit": float(v)} for a, b, v in zip(ia.ravel(), ib.ravel(), logits[:, unit])]
