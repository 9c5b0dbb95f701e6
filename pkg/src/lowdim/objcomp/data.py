"""Pair-comparison datasets over truncated latent windows, plus a JSON-lines cache."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from .latents import COMPARABLE, LATENT_NAMES, LatentSampler, LatentSpec, canonical_attr, window_indices

CACHE_FORMAT = "lowdim-objcomp-pairs"
CACHE_VERSION = 1
LABEL_NAMES = ("less", "equal", "greater")


@dataclass
class ComparisonDataset:
    """Latent rows of both objects and the one-hot (less, equal, greater) label.

    ``labels[i]`` compares object A's attribute to object B's:
    ``(a < b, a == b, a > b)``.
    """

    attr: str
    split: str
    lat_a: np.ndarray  # [n, 5] int
    lat_b: np.ndarray  # [n, 5] int
    labels: np.ndarray  # [n, 3] float one-hot

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def column(self) -> int:
        return LATENT_NAMES.index(self.attr)

    def subset(self, idx) -> "ComparisonDataset":
        return ComparisonDataset(self.attr, self.split, self.lat_a[idx], self.lat_b[idx], self.labels[idx])

    def label_index(self) -> np.ndarray:
        return self.labels.argmax(axis=1)


def comparison_labels(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a, b = np.asarray(a), np.asarray(b)
    return np.stack([a < b, a == b, a > b], axis=1).astype(np.float64)


def sample_pairs(sampler: LatentSampler, attr: str, n: int, rng: np.random.Generator,
                 split: str = "train") -> ComparisonDataset:
    attr = canonical_attr(attr)
    a = sampler.sample(rng, n)
    b = sampler.sample(rng, n)
    col = LATENT_NAMES.index(attr)
    return ComparisonDataset(attr, split, a, b, comparison_labels(a[:, col], b[:, col]))


def split_samplers(attr: str, spec: LatentSpec | None = None,
                   train_window: tuple[float, float] = (0.0, 0.6)) -> tuple[LatentSampler, LatentSampler]:
    """Samplers for the lower training window and the upper test window of ``attr``."""
    attr = canonical_attr(attr)
    if attr not in COMPARABLE:
        raise ValidationError(f"compared attribute must be one of {COMPARABLE}, got {attr!r}")
    spec = spec or LatentSpec()
    g = spec.grid_size(attr)
    full = LatentSampler(spec)
    train = full.restrict(attr, window_indices(g, *train_window))
    test = full.restrict(attr, window_indices(g, train_window[1], 1.0))
    return train, test


def generate_comparison_dataset(compared_attr: str, n_train: int = 60000, n_test: int = 20000,
                                rng: np.random.Generator | None = None, spec: LatentSpec | None = None,
                                train_window: tuple[float, float] = (0.0, 0.6)
                                ) -> tuple[ComparisonDataset, ComparisonDataset]:
    """Training pairs from the lower window of the compared latent, test pairs from the rest.

    All other latents are uniform over their full grids in both splits.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    train_s, test_s = split_samplers(compared_attr, spec, train_window)
    train = sample_pairs(train_s, compared_attr, n_train, rng, "train")
    test = sample_pairs(test_s, compared_attr, n_test, rng, "test")
    return train, test


def save_dataset(path: str | Path, ds: ComparisonDataset, meta: dict | None = None) -> None:
    """One JSON header line, then one line per pair: ``{"a": [...], "b": [...], "label": k}``.

    ``label`` is the index into (less, equal, greater). Observations are not
    stored; they are re-rendered from the latents on load.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {"format": CACHE_FORMAT, "version": CACHE_VERSION, "attr": ds.attr, "split": ds.split,
              "latents": list(LATENT_NAMES), "n": len(ds), "meta": meta or {}}
    with open(path, "w") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for a, b, k in zip(ds.lat_a.tolist(), ds.lat_b.tolist(), ds.label_index().tolist()):
            fh.write(json.dumps({"a": a, "b": b, "label": k}) + "\n")


def load_dataset(path: str | Path) -> ComparisonDataset:
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("format") != CACHE_FORMAT:
            raise ValidationError(f"{path}: not a pair cache (format={header.get('format')!r})")
        if header.get("version") != CACHE_VERSION:
            raise ValidationError(f"{path}: unsupported cache version {header.get('version')}")
        recs = [json.loads(line) for line in fh if line.strip()]
    a = np.array([r["a"] for r in recs], dtype=np.int64).reshape(-1, len(LATENT_NAMES))
    b = np.array([r["b"] for r in recs], dtype=np.int64).reshape(-1, len(LATENT_NAMES))
    labels = np.eye(3)[np.array([r["label"] for r in recs], dtype=np.int64)]
    ds = ComparisonDataset(header["attr"], header["split"], a, b, labels)
    col = ds.column
    if not np.array_equal(comparison_labels(a[:, col], b[:, col]), labels):
        raise ValidationError(f"{path}: stored labels disagree with the stored latents")
    return ds
