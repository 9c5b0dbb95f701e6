"""One-parameter ablation sweeps over the comparator's design knobs."""
from __future__ import annotations

import csv
import dataclasses
import time
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import spearmanr

from ..errors import ValidationError
from ..minirpm.train import MiniRpmConfig, make_rpm_splits, train_minirpm_once
from ..objcomp.latents import canonical_attr
from ..objcomp.train import (ObjCompConfig, PairData, accuracy, make_splits, pretrained_encoder_state,
                             train_pair_model)
from ..report import ExperimentReport, _fmt
from .hausdorff import hausdorff_distance, projected_difference_sets

PARAMETERS = {
    "objcomp": ("projection_dim", "num_projectors", "encoder_pretraining"),
    "minirpm": ("num_projectors",),
}


def _objcomp_cfg(cfg: ObjCompConfig, parameter: str, value) -> ObjCompConfig:
    if parameter == "projection_dim":
        return dataclasses.replace(cfg, proj_dim=int(value))
    if parameter == "num_projectors":
        return dataclasses.replace(cfg, num_heads=int(value))
    return dataclasses.replace(cfg, pretrain=bool(value))


def _check(task: str, parameter: str, values: Sequence) -> None:
    if task not in PARAMETERS:
        raise ValidationError(f"no ablations for task {task!r}; choose from {sorted(PARAMETERS)}")
    if parameter not in PARAMETERS[task]:
        raise ValidationError(f"{task} ablates {PARAMETERS[task]}, not {parameter!r}")
    if not len(values):
        raise ValidationError("ablation needs at least one value")
    if parameter != "encoder_pretraining" and any(int(v) < 1 for v in values):
        raise ValidationError(f"{parameter} values must be >= 1")


def ablation_sweep(task: str, parameter: str, values: Sequence, seeds: Sequence[int] = (0,),
                   cfg=None, attr: str = "colour", kinds: Sequence[str] | None = None,
                   n_hausdorff: int = 2000) -> ExperimentReport:
    """Train and evaluate once per (value, seed[, model]).

    objcomp rows carry ``id_acc``/``ood_acc``; projection-dim sweeps also
    record the normalised Hausdorff distance between projected training and
    o.o.d. differences. Pretraining sweeps run both models; the others run
    the comparator only.
    """
    _check(task, parameter, values)
    t0 = time.perf_counter()
    if task == "minirpm":
        cfg = cfg or MiniRpmConfig()
        report = ExperimentReport("ablate", {"task": task, "parameter": parameter, "values": list(values),
                                             "seeds": list(seeds), "config": dataclasses.asdict(cfg)})
        for s in seeds:
            splits = make_rpm_splits(cfg, s)
            for v in values:
                row = train_minirpm_once("comparator", dataclasses.replace(cfg, num_proj=int(v)), s, splits)
                report.add(param=parameter, value=int(v), seed=s, model="comparator",
                           id_acc=row["id_acc"], ood_acc=row["ood_acc"])
        report.wall_clock = time.perf_counter() - t0
        return report

    cfg = cfg or ObjCompConfig()
    attr = canonical_attr(attr)
    kinds = list(kinds) if kinds else (["comparator", "baseline"] if parameter == "encoder_pretraining"
                                       else ["comparator"])
    report = ExperimentReport("ablate", {"task": task, "parameter": parameter, "values": list(values),
                                         "attr": attr, "models": kinds, "seeds": list(seeds),
                                         "n_hausdorff": n_hausdorff, "config": dataclasses.asdict(cfg)})
    obs_model = cfg.observation_model()
    for s in seeds:
        splits = make_splits(attr, cfg, s)
        data = {k: PairData(getattr(splits, k), obs_model) for k in ("train", "iid", "ood")}
        shared = pretrained_encoder_state(cfg, s) if cfg.pretrain and parameter != "encoder_pretraining" else None
        for v in values:
            vcfg = _objcomp_cfg(cfg, parameter, v)
            state = shared
            if parameter == "encoder_pretraining":
                state = pretrained_encoder_state(vcfg, s) if vcfg.pretrain else None
            for kind in kinds:
                model = train_pair_model(kind, data["train"], vcfg, s, state)
                row = dict(param=parameter, value=v if parameter == "encoder_pretraining" else int(v), seed=s,
                           model=kind, id_acc=accuracy(model, data["iid"]), ood_acc=accuracy(model, data["ood"]))
                if parameter == "projection_dim" and kind == "comparator":
                    n = min(n_hausdorff, len(data["train"]), len(data["ood"]))
                    s_train, s_test = projected_difference_sets(model, _head(data["train"], n), _head(data["ood"], n))
                    row["hausdorff"] = hausdorff_distance(s_train, s_test)
                report.add(**row)
    report.wall_clock = time.perf_counter() - t0
    return report


class _head:
    """First ``n`` rendered pairs of a :class:`PairData`."""

    def __init__(self, data: PairData, n: int):
        self.obs_a, self.obs_b = data.obs_a[:n], data.obs_b[:n]


def sweep_means(report: ExperimentReport, metric: str, model: str = "comparator") -> tuple[np.ndarray, np.ndarray]:
    """Sorted sweep values and the seed-mean of ``metric`` at each."""
    values = sorted({r["value"] for r in report.rows if r["model"] == model and metric in r})
    means = np.array([report.values(metric, model=model, value=v).mean() for v in values])
    return np.array(values, dtype=np.float64), means


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    return float(spearmanr(x, y).statistic)


def write_sweep_csv(path: str | Path, report: ExperimentReport) -> Path:
    """Long format: ``param,value,seed,model,metric,score``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["param", "value", "seed", "model", "metric", "score"])
        for r in report.rows:
            for m in ("id_acc", "ood_acc", "hausdorff"):
                if m in r:
                    w.writerow([r["param"], r["value"], r["seed"], r["model"], m, _fmt(r[m])])
    return path
