"""Hausdorff distance between sets of projected pair differences."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError, ValidationError
from ..kernels import directed_hausdorff
from ..nn import make_rng

DEFAULT_CAP = 5000


@dataclass
class PointSet:
    """``points[n, d]`` plus the normalisation that was applied to them (if any)."""

    points: np.ndarray
    mean: np.ndarray | None = None
    std: np.ndarray | None = None
    zero_std: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2:
            raise DimensionError(f"points must be [n, d], got {pts.shape}")
        self.points = pts

    def __len__(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _as_points(x) -> np.ndarray:
    return x.points if isinstance(x, PointSet) else PointSet(x).points


def _subsample(pts: np.ndarray, cap: int | None, rng: np.random.Generator) -> np.ndarray:
    if cap is None or len(pts) <= cap:
        return pts
    return pts[np.sort(rng.choice(len(pts), size=cap, replace=False))]


def hausdorff_distance(a, b, cap: int | None = DEFAULT_CAP, seed: int = 0) -> float:
    """``max(sup_a inf_b |a-b|, sup_b inf_a |a-b|)``, Euclidean.

    Exact when both sets have at most ``cap`` points; larger sets are
    uniformly subsampled to ``cap`` with a stream fixed by ``seed``.
    """
    pa, pb = _as_points(a), _as_points(b)
    if len(pa) == 0 or len(pb) == 0:
        raise ValidationError("Hausdorff distance of an empty set is undefined")
    if pa.shape[1] != pb.shape[1]:
        raise DimensionError(f"point dims differ: {pa.shape[1]} vs {pb.shape[1]}")
    pa = _subsample(pa, cap, make_rng(seed, "hausdorff", "a"))
    pb = _subsample(pb, cap, make_rng(seed, "hausdorff", "b"))
    return max(directed_hausdorff(pa, pb), directed_hausdorff(pb, pa))


def normalise(train: np.ndarray, *others: np.ndarray) -> tuple[PointSet, ...]:
    """Scale every set componentwise by the mean/std of ``train``; zero-std components use 1 and are flagged."""
    train = np.asarray(train, dtype=np.float64)
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    zero = std == 0
    std = np.where(zero, 1.0, std)
    return tuple(PointSet((np.asarray(x, dtype=np.float64) - mean) / std, mean, std, zero)
                 for x in (train, *others))


def projected_differences(model, obs_a: np.ndarray, obs_b: np.ndarray, chunk: int = 1000) -> np.ndarray:
    """``p(e_a) - p(e_b)`` for each pair, heads flattened to ``[n, K * d]``."""
    comp = model.comparator
    out = []
    for lo in range(0, len(obs_a), chunk):
        ea, eb = model.encode_pair(obs_a[lo:lo + chunk], obs_b[lo:lo + chunk])
        d = (comp.project(ea) - comp.project(eb)).data
        out.append(d.reshape(len(d), -1))
    return np.concatenate(out, axis=0) if out else np.zeros((0, comp.num_heads * comp.proj_dim))


def projected_difference_sets(model, train, test) -> tuple[PointSet, PointSet]:
    """Normalised ``(S_train, S_test)`` from two rendered pair sets (objects with ``obs_a``/``obs_b``)."""
    raw_train = projected_differences(model, train.obs_a, train.obs_b)
    raw_test = projected_differences(model, test.obs_a, test.obs_b)
    return normalise(raw_train, raw_test)
