"""Per-run metrics and their aggregation."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np


@dataclass
class ExperimentReport:
    task: str
    config: dict[str, Any]
    rows: list[dict[str, Any]] = field(default_factory=list)
    wall_clock: float = 0.0
    artifacts: dict[str, str] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)

    def add(self, **row: Any) -> None:
        self.rows.append(row)

    def metric_names(self) -> list[str]:
        names: list[str] = []
        for row in self.rows:
            for k, v in row.items():
                if isinstance(v, (float, np.floating)) and k not in names:
                    names.append(k)
        return names

    def values(self, metric: str, **where: Any) -> np.ndarray:
        return np.array(
            [r[metric] for r in self.rows if all(r.get(k) == v for k, v in where.items())],
            dtype=np.float64,
        )

    def aggregate(self, group_by: tuple[str, ...] = ("model",)) -> list[dict[str, Any]]:
        """Mean and population std of every float metric per group."""
        groups: dict[tuple, list[dict[str, Any]]] = {}
        for row in self.rows:
            groups.setdefault(tuple(row.get(k) for k in group_by), []).append(row)
        out = []
        for key, rows in groups.items():
            agg: dict[str, Any] = dict(zip(group_by, key))
            agg["n"] = len(rows)
            for m in self.metric_names():
                vals = np.array([r[m] for r in rows if m in r], dtype=np.float64)
                if len(vals):
                    agg[f"{m}_mean"] = float(vals.mean())
                    agg[f"{m}_std"] = float(vals.std())
            out.append(agg)
        return out

    def to_dict(self, group_by: tuple[str, ...] = ("model",)) -> dict[str, Any]:
        return {
            "task": self.task,
            "config": _plain(self.config),
            "rows": [_plain(r) for r in self.rows],
            "aggregate": [_plain(r) for r in self.aggregate(group_by)],
            "artifacts": self.artifacts,
            "extra": _plain(self.extra),
        }

    def write(self, out_dir: str | Path, group_by: tuple[str, ...] = ("model",)) -> Path:
        """Write ``report.json``, ``metrics.csv`` and ``timing.json``.

        Wall-clock time lives in ``timing.json`` so the other two files are
        byte-identical across repeated seeded runs. Artifact paths under
        ``out_dir`` are recorded relative to it.
        """
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.artifacts["metrics"] = str(out / "metrics.csv")
        self.artifacts = {k: _relative(v, out) for k, v in self.artifacts.items()}
        (out / "report.json").write_text(json.dumps(self.to_dict(group_by), indent=2, sort_keys=True) + "\n")
        write_metrics_csv(out / "metrics.csv", self.rows, self.aggregate(group_by))
        (out / "timing.json").write_text(json.dumps({"wall_clock_s": self.wall_clock}) + "\n")
        return out


def _relative(path: str, root: Path) -> str:
    p = Path(path)
    try:
        return p.relative_to(root).as_posix() if p.is_absolute() == root.is_absolute() else path
    except ValueError:
        return path


def _plain(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def write_metrics_csv(path: Path, rows: list[dict[str, Any]], aggregate: list[dict[str, Any]]) -> None:
    """Per-seed rows followed by one aggregate row per group (``seed`` = ``mean``/``std``)."""
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in cols])
        for agg in aggregate:
            for stat in ("mean", "std"):
                line = []
                for c in cols:
                    if c == "seed":
                        line.append(stat)
                    elif f"{c}_{stat}" in agg:
                        line.append(_fmt(agg[f"{c}_{stat}"]))
                    else:
                        line.append(_fmt(agg.get(c, "")))
                w.writerow(line)


def _fmt(v: Any) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def append_csv(path: str | Path, header: list[str], rows: list[list[Any]]) -> None:
    path = Path(path)
    new = not path.exists()
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
