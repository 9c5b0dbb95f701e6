"""Sample complexity under truncated training distributions.

A learner trained on ``M`` draws from ``D_s = T(D, beta, u)`` succeeds at
``(M, eps, delta)`` when ``P_{x ~ D}[f(x) matches g(x)] >= 1 - delta``,
with the probability estimated on a fixed evaluation set drawn from the
full ``D``. "Matches" is label equality for classification and
``||f(x) - g(x)|| < eps`` for regression.
"""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from ..errors import ValidationError
from ..nn import make_rng
from ..objcomp.data import sample_pairs
from ..objcomp.latents import LatentSampler, canonical_attr
from ..objcomp.train import ObjCompConfig, PairData, accuracy, pretrained_encoder_state, train_pair_model
from ..report import ExperimentReport
from .truncation import TruncationSpec, truncate_distribution

TASKS = ("classification", "regression")


@dataclass
class LearnabilityQuery:
    """``fit(M, seed, spec)`` is the learning algorithm; ``predict(f, x)`` evaluates its output."""

    epsilon: float
    delta: float
    m_grid: Sequence[int]
    fit: Callable[[int, int, TruncationSpec], Any]
    predict: Callable[[Any, Any], np.ndarray]
    eval_inputs: Any
    eval_targets: np.ndarray
    task: str = "classification"

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ValidationError("epsilon must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValidationError("delta must lie in (0, 1)")
        grid = list(self.m_grid)
        if not grid or any(m < 1 for m in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValidationError(f"M grid must be positive and strictly increasing, got {grid}")
        if self.task not in TASKS:
            raise ValidationError(f"task must be one of {TASKS}")


def success_indicator(pred: np.ndarray, target: np.ndarray, task: str = "classification",
                      epsilon: float = 0.5) -> np.ndarray:
    """Per-sample success. Classification accepts labels or score rows (argmax taken)."""
    pred, target = np.asarray(pred), np.asarray(target)
    if task == "classification":
        if pred.ndim == target.ndim + 1:
            pred = pred.argmax(axis=-1)
        if target.ndim == pred.ndim + 1:
            target = target.argmax(axis=-1)
        return pred == target
    err = np.abs(pred - target) if pred.ndim == 1 else np.linalg.norm(pred - target, axis=-1)
    return err < epsilon


@dataclass
class SampleComplexity:
    m_star: int | None  # None: threshold not reached on the grid
    threshold: float
    m_grid: list[int]
    success: list[list[float]]  # per M, one entry per seed
    smoothed: list[float] = field(default_factory=list)

    @property
    def reached(self) -> bool:
        return self.m_star is not None

    def mean_curve(self) -> list[float]:
        return [float(np.mean(s)) for s in self.success]


def minimal_m(m_grid: Sequence[int], success: Sequence[Sequence[float]], delta: float) -> SampleComplexity:
    """First grid point whose smoothed mean success reaches ``1 - delta``.

    The smoothed curve is the running maximum of the seed-mean, so adding
    grid points can only move the reported ``M`` down.
    """
    means = np.array([np.mean(s) for s in success], dtype=np.float64)
    smoothed = np.maximum.accumulate(means) if len(means) else means
    threshold = 1.0 - delta
    hit = np.nonzero(smoothed >= threshold - 1e-12)[0]
    m_star = int(m_grid[hit[0]]) if len(hit) else None
    return SampleComplexity(m_star, threshold, [int(m) for m in m_grid],
                            [[float(v) for v in s] for s in success], smoothed.tolist())


def estimate_sample_complexity(query: LearnabilityQuery, spec: TruncationSpec, n_seeds: int = 5,
                               seeds: Sequence[int] | None = None) -> SampleComplexity:
    """Train ``n_seeds`` learners per ``M`` on truncated data and score them on the full distribution."""
    seeds = list(seeds) if seeds is not None else list(range(n_seeds))
    success = []
    for m in query.m_grid:
        per_seed = []
        for s in seeds:
            f = query.fit(int(m), s, spec)
            ok = success_indicator(query.predict(f, query.eval_inputs), query.eval_targets, query.task,
                                   query.epsilon)
            per_seed.append(float(ok.mean()))
        success.append(per_seed)
    return minimal_m(query.m_grid, success, query.delta)


# -- pair-comparison instantiation ---------------------------------------------


def _ood_sampler(full: LatentSampler, spec: TruncationSpec) -> LatentSampler:
    out = full
    for d in spec.dims:
        out = out.restrict(d, spec.complement(full.spec.grid_size(d)))
    return out


class _EncoderCache:
    def __init__(self, cfg: ObjCompConfig):
        self.cfg, self.states = cfg, {}

    def __call__(self, seed: int):
        if not self.cfg.pretrain:
            return None
        if seed not in self.states:
            self.states[seed] = pretrained_encoder_state(self.cfg, seed)
        return self.states[seed]


def objcomp_query(kind: str, attr: str, m_grid: Sequence[int], cfg: ObjCompConfig | None = None,
                  delta: float = 0.1, n_eval: int = 20000, eval_seed: int = 0) -> LearnabilityQuery:
    """Pair comparison of ``attr``: the learner sees ``M`` truncated pairs, evaluation pairs span the full grids."""
    cfg = cfg or ObjCompConfig()
    attr = canonical_attr(attr)
    obs_model = cfg.observation_model()
    full = LatentSampler(obs_model.spec)
    eval_data = PairData(sample_pairs(full, attr, n_eval, make_rng(eval_seed, "learnability", "eval", attr), "full"),
                         obs_model)
    encoders = _EncoderCache(cfg)

    def fit(m: int, seed: int, spec: TruncationSpec):
        ds = sample_pairs(truncate_distribution(full, spec), attr, m, make_rng(seed, "learnability", "train", attr, m))
        return train_pair_model(kind, PairData(ds, obs_model), cfg, seed, encoders(seed))

    def predict(model, data: PairData) -> np.ndarray:
        return np.concatenate([model.logits(data.obs_a[i:i + 1000], data.obs_b[i:i + 1000]).data
                               for i in range(0, len(data), 1000)])

    return LearnabilityQuery(epsilon=0.5, delta=delta, m_grid=list(m_grid), fit=fit, predict=predict,
                             eval_inputs=eval_data, eval_targets=eval_data.ds.label_index())


def m_sweep(kinds: Sequence[str], attr: str, m_grid: Sequence[int], spec: TruncationSpec,
            cfg: ObjCompConfig | None = None, seeds: Sequence[int] = (0,), n_eval: int = 5000,
            delta: float = 0.1) -> ExperimentReport:
    """Accuracy-vs-M curves for each model: i.d. (inside the window), o.o.d. (outside it) and full.

    ``report.extra["sample_complexity"][kind]`` holds the minimal ``M`` on
    the full-distribution success curve.
    """
    cfg = cfg or ObjCompConfig()
    attr = canonical_attr(attr)
    if attr not in spec.dims:
        raise ValidationError(f"truncation {spec.dims} does not touch the compared attribute {attr!r}")
    obs_model = cfg.observation_model()
    full = LatentSampler(obs_model.spec)
    train_s = truncate_distribution(full, spec)
    evals = {
        "id_acc": PairData(sample_pairs(train_s, attr, n_eval, make_rng(0, "msweep", "iid", attr), "iid"), obs_model),
        "ood_acc": PairData(sample_pairs(_ood_sampler(full, spec), attr, n_eval,
                                         make_rng(0, "msweep", "ood", attr), "ood"), obs_model),
        "full_acc": PairData(sample_pairs(full, attr, n_eval, make_rng(0, "msweep", "full", attr), "full"), obs_model),
    }
    report = ExperimentReport("m_sweep", {"models": list(kinds), "attr": attr, "m_grid": [int(m) for m in m_grid],
                                          "truncation": asdict(spec), "seeds": list(seeds), "n_eval": n_eval,
                                          "delta": delta, "config": asdict(cfg)})
    encoders = _EncoderCache(cfg)
    t0 = time.perf_counter()
    for s in seeds:
        for m in m_grid:
            ds = sample_pairs(train_s, attr, int(m), make_rng(s, "msweep", "train", attr, int(m)))
            train = PairData(ds, obs_model)
            for kind in kinds:
                model = train_pair_model(kind, train, cfg, s, encoders(s))
                report.add(model=kind, M=int(m), seed=s, **{k: accuracy(model, d) for k, d in evals.items()})
    report.wall_clock = time.perf_counter() - t0
    report.extra["sample_complexity"] = {
        kind: asdict(minimal_m(m_grid, [report.values("full_acc", model=kind, M=int(m)).tolist() for m in m_grid],
                               delta))
        for kind in kinds
    }
    return report
