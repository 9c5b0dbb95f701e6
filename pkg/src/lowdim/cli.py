"""Experiment runner: ``lowdim <task> [flags]`` or ``lowdim --task <task> [flags]``.

Every run writes ``report.json``, ``metrics.csv`` and ``timing.json`` to
``--out-dir``; analysis runs add their CSV exports next to them. A config
file holds flat ``key = value`` lines (an optional ``[run]`` header is
allowed); command-line flags override it.
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import re
import sys
import time
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import LowdimError, ValidationError
from .nn import load_params, save_params
from .report import ExperimentReport
from .training import ModelHooks, TrainConfig

TASKS = ("setmax", "objcomp", "minirpm", "analyze", "ablate")
ANALYSES = ("exports", "msweep", "prune")
# per task: (epochs, batch)
TASK_DEFAULTS = {"setmax": (20, 64), "objcomp": (20, 64), "minirpm": (30, 128)}


def parse_int_list(text: str) -> tuple[int, ...]:
    """``"0,2,5"``, ``"0-4"`` (inclusive) or a mix of both; values are non-negative."""
    out: list[int] = []
    for part in str(text).replace(" ", "").split(","):
        if not part:
            continue
        m = re.fullmatch(r"(\d+)-(\d+)", part)
        if m:
            lo, hi = int(m.group(1)), int(m.group(2))
            if hi < lo:
                raise ValidationError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        elif part.isdigit():
            out.append(int(part))
        else:
            raise ValidationError(f"not a non-negative integer or range: {part!r}")
    return tuple(out)


def parse_str_list(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in str(text).split(",") if p.strip())


@dataclass
class RunConfig:
    task: str = "setmax"
    model: tuple[str, ...] = ()  # empty: every model of the task
    seeds: tuple[int, ...] = (0,)
    epochs: int | None = None  # None: task default
    batch: int | None = None
    lr: float = 0.001
    clip_norm: float | None = 1.0
    beta: float = 0.6
    epsilon: float = 0.5
    delta: float = 0.1
    proj_dim: int = 1
    num_heads: int = 1
    width_mult: float = 1 / 16
    num_proj: int | None = None
    max_rules: int = 1
    attr: tuple[str, ...] = ("size", "x", "colour")
    observation: str = "features"
    n_train: int | None = None
    n_test: int | None = None
    target: str = "objcomp"  # task analysed or ablated
    analysis: str = "exports"
    m_grid: tuple[int, ...] = (1000, 3000, 10000)
    keep_fraction: float = 0.5
    parameter: str = "projection_dim"
    values: tuple[str, ...] = ("1", "4", "16", "64", "128")
    out_dir: str = "runs"
    save_params: str = ""
    load_params: str = ""

    def validate(self) -> "RunConfig":
        checks = [
            (self.task in TASKS, f"task must be one of {TASKS}"),
            (self.lr > 0, "lr must be positive"),
            (self.epochs is None or self.epochs >= 0, "epochs must be >= 0"),
            (self.batch is None or self.batch >= 1, "batch must be >= 1"),
            (self.clip_norm is None or self.clip_norm > 0, "clip_norm must be positive (or none)"),
            (0 < self.beta < 1, "beta must lie in (0, 1)"),
            (self.epsilon > 0, "epsilon must be positive"),
            (0 < self.delta < 1, "delta must lie in (0, 1)"),
            (self.proj_dim >= 1 and self.num_heads >= 1, "proj_dim and num_heads must be >= 1"),
            (self.width_mult > 0, "width_mult must be positive"),
            (self.num_proj is None or self.num_proj >= 1, "num_proj must be >= 1"),
            (1 <= self.max_rules <= 3, "max_rules must be in 1..3"),
            (len(self.seeds) > 0, "at least one seed"),
            (self.n_train is None or self.n_train >= 1, "n_train must be >= 1"),
            (self.n_test is None or self.n_test >= 1, "n_test must be >= 1"),
            (self.analysis in ANALYSES, f"analysis must be one of {ANALYSES}"),
            (0 < self.keep_fraction <= 1, "keep_fraction must lie in (0, 1]"),
            (self.observation in ("features", "image"), "observation must be features or image"),
            (self.target in ("objcomp", "minirpm"), "target must be objcomp or minirpm"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValidationError(msg)
        return self

    def train_config(self, task: str) -> TrainConfig:
        epochs, batch = TASK_DEFAULTS[task]
        return TrainConfig(epochs=self.epochs if self.epochs is not None else epochs,
                           batch_size=self.batch if self.batch is not None else batch,
                           lr=self.lr, clip_norm=self.clip_norm)


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _convert(key: str, raw) -> object:
    """Parse a string (file or flag) into the type of ``RunConfig.<key>``."""
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    kind = _FIELDS[key].type
    try:
        if key in ("seeds", "m_grid"):
            return parse_int_list(text)
        if key in ("model", "attr", "values"):
            return parse_str_list(text)
        if "None" in kind and text.lower() in ("", "none", "default"):
            return None
        if kind.startswith("int"):
            return int(text)
        if kind.startswith("float"):
            return float(text)
        return text
    except ValueError as e:
        raise ValidationError(f"bad value for {key}: {raw!r} ({e})") from None


def _read_file(path: str | Path) -> dict[str, str]:
    text = Path(path).read_text()
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as e:
        raise ValidationError(f"{path}: malformed config ({e})") from None
    extra = [s for s in parser.sections() if s != "run"]
    if extra:
        raise ValidationError(f"{path}: unknown sections {extra}; use a single [run] section or none")
    return dict(parser["run"]) if parser.has_section("run") else {}


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the file, then ``overrides`` (flag values; ``None`` means not given)."""
    values: dict[str, object] = {}
    if path:
        for k, v in _read_file(path).items():
            key = k.strip().replace("-", "_")
            if key not in _FIELDS:
                raise ValidationError(f"{path}: unknown key {k!r}")
            values[key] = _convert(key, v)
    for k, v in (overrides or {}).items():
        if v is None:
            continue
        key = k.replace("-", "_")
        if key not in _FIELDS:
            raise ValidationError(f"unknown setting {k!r}")
        values[key] = _convert(key, v)
    return RunConfig(**values).validate()


# -- task runners --------------------------------------------------------------


def _hooks(cfg: RunConfig) -> ModelHooks:
    def load(model, tag):
        path = Path(cfg.load_params) / f"{tag}.npz"
        if not path.exists():
            raise ValidationError(f"no saved parameters for {tag} in {cfg.load_params}")
        load_params(path, model)

    def save(model, tag):
        save_params(Path(cfg.save_params) / f"{tag}.npz", model, {"tag": tag, "task": cfg.task})

    return ModelHooks(load if cfg.load_params else None, save if cfg.save_params else None)


def _objcomp_config(cfg: RunConfig):
    from .objcomp import ObjCompConfig

    kw = {}
    if cfg.n_train is not None:
        kw["n_train"] = cfg.n_train
    if cfg.n_test is not None:
        kw["n_test"] = kw["n_id"] = cfg.n_test
    return ObjCompConfig(observation=cfg.observation, train_window=(0.0, cfg.beta), proj_dim=cfg.proj_dim,
                         num_heads=cfg.num_heads, train=cfg.train_config("objcomp"), **kw)


def _minirpm_config(cfg: RunConfig):
    from .minirpm import MiniRpmConfig

    kw = {}
    if cfg.n_train is not None:
        kw["n_train"] = cfg.n_train
    if cfg.n_test is not None:
        kw["n_test"] = kw["n_id"] = cfg.n_test
    return MiniRpmConfig(max_rules=cfg.max_rules, width_mult=cfg.width_mult, num_proj=cfg.num_proj,
                         train=cfg.train_config("minirpm"), **kw)


def run_setmax(cfg: RunConfig) -> tuple[ExperimentReport, tuple[str, ...]]:
    from .setmax import MODEL_KINDS, SetMaxSplitSpec, train_setmax_once

    kinds = cfg.model or MODEL_KINDS
    spec = SetMaxSplitSpec(**({"n_train": cfg.n_train} if cfg.n_train else {}),
                           **({"n_test": cfg.n_test} if cfg.n_test else {}))
    train = cfg.train_config("setmax")
    report = ExperimentReport("setmax", {"models": list(kinds), "seeds": list(cfg.seeds),
                                         "split": dataclasses.asdict(spec), "train": dataclasses.asdict(train)})
    hooks = _hooks(cfg)
    for kind in kinds:
        for s in cfg.seeds:
            report.add(**train_setmax_once(kind, spec, train, s, hooks=hooks))
    return report, ("model",)


def run_objcomp(cfg: RunConfig) -> tuple[ExperimentReport, tuple[str, ...]]:
    from .objcomp import train_and_eval_objcomp

    report = train_and_eval_objcomp(cfg.model or ("comparator", "baseline"), cfg.attr, _objcomp_config(cfg),
                                    cfg.seeds, _hooks(cfg))
    return report, ("model", "attr")


def run_minirpm(cfg: RunConfig) -> tuple[ExperimentReport, tuple[str, ...]]:
    from .minirpm import train_and_eval_minirpm

    report = train_and_eval_minirpm(cfg.model or ("comparator", "baseline"), _minirpm_config(cfg), cfg.seeds,
                                    _hooks(cfg))
    return report, ("model", "num_proj")


def run_ablate(cfg: RunConfig) -> tuple[ExperimentReport, tuple[str, ...]]:
    from .analysis import ablation_sweep, write_sweep_csv

    if cfg.parameter == "encoder_pretraining":
        values = [v.lower() in ("1", "true", "on", "yes") for v in cfg.values]
    else:
        values = [int(v) for v in cfg.values]
    if cfg.target == "minirpm":
        report = ablation_sweep("minirpm", cfg.parameter, values, cfg.seeds, _minirpm_config(cfg))
    else:
        report = ablation_sweep("objcomp", cfg.parameter, values, cfg.seeds, _objcomp_config(cfg), attr=cfg.attr[0],
                                kinds=cfg.model or None)
    report.artifacts["sweep"] = str(write_sweep_csv(Path(cfg.out_dir) / "sweep.csv", report))
    return report, ("model", "value")


def run_analyze(cfg: RunConfig) -> tuple[ExperimentReport, tuple[str, ...]]:
    if cfg.analysis == "msweep":
        from .analysis import TruncationSpec, m_sweep

        attr = cfg.attr[0]
        report = m_sweep(cfg.model or ("comparator", "baseline"), attr, cfg.m_grid, TruncationSpec(cfg.beta, (attr,)),
                         _objcomp_config(cfg), cfg.seeds, n_eval=cfg.n_test or 5000, delta=cfg.delta)
        return report, ("model", "M")
    if cfg.analysis == "prune":
        return _analyze_prune(cfg), ("model",)
    return _analyze_exports(cfg), ("model",)


def _analyze_exports(cfg: RunConfig) -> ExperimentReport:
    from .analysis import (difference_grid, export_attribute_landscape, export_function_landscape,
                           export_projection_scatter, hausdorff_distance, projected_difference_sets,
                           scatter_columns, write_records_csv)
    from .nn import make_rng
    from .objcomp import split_samplers
    from .objcomp.train import PairData, accuracy, make_splits, pretrained_encoder_state, train_pair_model

    ocfg = _objcomp_config(cfg)
    obs_model = ocfg.observation_model()
    attr = cfg.attr[0]
    out = Path(cfg.out_dir)
    report = ExperimentReport("analyze", {"analysis": "exports", "attr": attr, "seeds": list(cfg.seeds),
                                          "config": dataclasses.asdict(ocfg)})
    for s in cfg.seeds:
        splits = make_splits(attr, ocfg, s)
        data = {k: PairData(getattr(splits, k), obs_model) for k in ("train", "iid", "ood")}
        state = pretrained_encoder_state(ocfg, s) if ocfg.pretrain else None
        model = train_pair_model("comparator", data["train"], ocfg, s, state, _hooks(cfg))
        s_train, s_test = projected_difference_sets(model, data["train"], data["ood"])
        report.add(model="comparator", attr=attr, seed=s, id_acc=accuracy(model, data["iid"]),
                   ood_acc=accuracy(model, data["ood"]), hausdorff=hausdorff_distance(s_train, s_test))
        train_s, test_s = split_samplers(attr, obs_model.spec, ocfg.train_window)
        rng = make_rng(s, "analyze", "scatter")
        lat = np.concatenate([train_s.sample(rng, 500), test_s.sample(rng, 500)])
        recs = export_projection_scatter(model, obs_model.render(lat), lat, attr, ["train"] * 500 + ["test"] * 500)
        report.artifacts[f"scatter_seed{s}"] = str(write_records_csv(out / f"scatter_{attr}_seed{s}.csv", recs,
                                                                     scatter_columns(recs)))
        recs = export_attribute_landscape(model, obs_model, attr)
        report.artifacts[f"attr_landscape_seed{s}"] = str(
            write_records_csv(out / f"attr_landscape_{attr}_seed{s}.csv", recs, ["a", "b", "logit"]))
        if model.comparator.proj_dim <= 2 and model.comparator.num_heads == 1:
            raw = s_train.points * s_train.std + s_train.mean
            lo, hi = float(raw.min()), float(raw.max())
            span = max(hi - lo, 1e-6)
            grid = difference_grid(lo - 0.25 * span, hi + 0.25 * span, 101 if model.comparator.proj_dim == 1 else 41,
                                   model.comparator.proj_dim)
            recs = export_function_landscape(model, grid)
            report.artifacts[f"landscape_seed{s}"] = str(write_records_csv(out / f"landscape_{attr}_seed{s}.csv", recs))
    return report


def _analyze_prune(cfg: RunConfig) -> ExperimentReport:
    from .analysis import export_attribute_landscape, magnitude_prune, sparsity, write_records_csv
    from .nn import cross_entropy, make_rng
    from .objcomp.train import PairData, accuracy, make_splits, pretrained_encoder_state, train_pair_model
    from .training import fit

    ocfg = _objcomp_config(cfg)
    obs_model = ocfg.observation_model()
    attr = cfg.attr[0]
    out = Path(cfg.out_dir)
    report = ExperimentReport("analyze", {"analysis": "prune", "attr": attr, "keep_fraction": cfg.keep_fraction,
                                          "seeds": list(cfg.seeds), "config": dataclasses.asdict(ocfg)})
    for s in cfg.seeds:
        splits = make_splits(attr, ocfg, s)
        data = {k: PairData(getattr(splits, k), obs_model) for k in ("train", "iid", "ood")}
        state = pretrained_encoder_state(ocfg, s) if ocfg.pretrain else None
        models = {kind: train_pair_model(kind, data["train"], ocfg, s, state) for kind in ("comparator", "baseline")}
        pruned = magnitude_prune(models["baseline"], cfg.keep_fraction)
        tr = data["train"]
        fit(pruned, len(tr), lambda idx: cross_entropy(pruned(tr.obs_a[idx], tr.obs_b[idx]), tr.ds.labels[idx]),
            ocfg.train, make_rng(s, "analyze", "prune-retrain"))
        models["baseline_pruned"] = pruned
        for name, m in models.items():
            report.add(model=name, attr=attr, seed=s, id_acc=accuracy(m, data["iid"]),
                       ood_acc=accuracy(m, data["ood"]), sparsity=sparsity(m))
            recs = export_attribute_landscape(m, obs_model, attr)
            report.artifacts[f"landscape_{name}_seed{s}"] = str(
                write_records_csv(out / f"attr_landscape_{name}_{attr}_seed{s}.csv", recs, ["a", "b", "logit"]))
    return report


RUNNERS = {"setmax": run_setmax, "objcomp": run_objcomp, "minirpm": run_minirpm, "analyze": run_analyze,
           "ablate": run_ablate}


def run(cfg: RunConfig) -> ExperimentReport:
    """Run ``cfg.task`` and write its report files to ``cfg.out_dir``."""
    cfg.validate()
    t0 = time.perf_counter()
    report, group_by = RUNNERS[cfg.task](cfg)
    report.config = {"run": _plain_config(cfg), **report.config}
    report.wall_clock = time.perf_counter() - t0
    report.write(cfg.out_dir, group_by)
    return report


def _plain_config(cfg: RunConfig) -> dict:
    # out_dir and parameter paths do not change results, so they stay out of the report
    d = dataclasses.asdict(cfg)
    for k in ("out_dir", "save_params", "load_params"):
        d.pop(k)
    return d


# -- argument parsing ------------------------------------------------------------


FLAGS = {
    "--task": "task to run when no subcommand is given",
    "--model": "comma-separated model kinds (default: all for the task)",
    "--seeds": "seed list, e.g. 0,1,2 or 0-9",
    "--epochs": "training epochs (default 20; 30 for minirpm)",
    "--batch": "batch size (default 64; 128 for minirpm)",
    "--lr": "learning rate (default 0.001)",
    "--clip-norm": "global gradient-norm cap, or 'none' (default 1.0)",
    "--beta": "truncation ratio of the training window (default 0.6)",
    "--epsilon": "regression tolerance of the learnability criterion",
    "--delta": "failure probability of the learnability criterion",
    "--proj-dim": "projection dimension d of the comparator",
    "--num-heads": "number of projection heads K (objcomp)",
    "--width-mult": "width multiplier of the minirpm stack (default 1/16)",
    "--num-proj": "projector count K of the minirpm comparator",
    "--max-rules": "most rules per minirpm instance",
    "--attr": "compared attribute(s): size, x, colour",
    "--observation": "objcomp observations: features or image",
    "--n-train": "training-set size",
    "--n-test": "test-set size",
    "--target": "task analysed or ablated (objcomp or minirpm)",
    "--analysis": f"analysis kind: {', '.join(ANALYSES)}",
    "--m-grid": "training sizes for the M sweep",
    "--keep-fraction": "weights kept by magnitude pruning",
    "--parameter": "ablated parameter: projection_dim, num_projectors, encoder_pretraining",
    "--values": "comma-separated ablation values",
    "--out-dir": "output directory",
    "--save-params": "directory to save trained parameters into",
    "--load-params": "directory to load parameters from before training",
    "--config": "flat key = value config file",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lowdim", description="Low-dimensional comparator experiments.")
    parser.add_argument("command", nargs="?", choices=TASKS, help="task to run (overrides --task)")
    for flag, text in FLAGS.items():
        parser.add_argument(flag, default=None, help=text)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    if args.command:
        overrides["task"] = args.command
    try:
        cfg = load_config(args.config, overrides)
        report = run(cfg)
    except (LowdimError, OSError) as e:
        print(f"lowdim: error: {e}", file=sys.stderr)
        return 1
    for row in report.aggregate(_group_of(report)):
        print(json.dumps(row, sort_keys=True))
    print(f"wrote {Path(cfg.out_dir) / 'report.json'}")
    return 0


def _group_of(report: ExperimentReport) -> tuple[str, ...]:
    keys = report.rows[0].keys() if report.rows else ()
    return tuple(k for k in ("model", "attr", "num_proj", "M", "value") if k in keys) or ("model",)


if __name__ == "__main__":
    sys.exit(main())
