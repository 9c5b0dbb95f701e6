import csv
import json

import numpy as np
import pytest

from lowdim.report import ExperimentReport, append_csv


def make_report(rng):
    rep = ExperimentReport("demo", {"k": 1})
    vals = {}
    for model in ("a", "b"):
        vals[model] = rng.normal(size=5)
        for s, v in enumerate(vals[model]):
            rep.add(model=model, seed=s, score=float(v))
    return rep, vals


def test_aggregate_matches_numpy(rng):
    rep, vals = make_report(rng)
    agg = {r["model"]: r for r in rep.aggregate()}
    for model, v in vals.items():
        assert agg[model]["n"] == 5
        assert agg[model]["score_mean"] == pytest.approx(v.mean(), abs=1e-12)
        assert agg[model]["score_std"] == pytest.approx(v.std(), abs=1e-12)


def test_write_is_deterministic_and_timing_separate(tmp_path, rng):
    rep, _ = make_report(rng)
    rep.wall_clock = 1.0
    rep.write(tmp_path / "x")
    rep.wall_clock = 2.0
    rep.write(tmp_path / "y")
    for name in ("report.json", "metrics.csv"):
        a = (tmp_path / "x" / name).read_text().replace(str(tmp_path / "x"), "")
        b = (tmp_path / "y" / name).read_text().replace(str(tmp_path / "y"), "")
        assert a == b
    assert json.loads((tmp_path / "y" / "timing.json").read_text()) == {"wall_clock_s": 2.0}


def test_metrics_csv_layout(tmp_path, rng):
    rep, vals = make_report(rng)
    rep.write(tmp_path)
    rows = list(csv.DictReader(open(tmp_path / "metrics.csv")))
    assert len(rows) == 10 + 4
    means = [r for r in rows if r["seed"] == "mean"]
    assert [r["model"] for r in means] == ["a", "b"]
    assert float(means[0]["score"]) == pytest.approx(vals["a"].mean(), abs=1e-12)


def test_report_json_is_plain(tmp_path):
    rep = ExperimentReport("demo", {"arr": np.arange(2)})
    rep.add(model="a", seed=0, score=np.float64(0.5))
    rep.extra["n"] = np.int64(3)
    rep.write(tmp_path)
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["rows"][0]["score"] == 0.5 and data["extra"]["n"] == 3


def test_append_csv_writes_header_once(tmp_path):
    p = tmp_path / "log.csv"
    append_csv(p, ["a", "b"], [[1, 0.5]])
    append_csv(p, ["a", "b"], [[2, 0.25]])
    assert p.read_text().splitlines() == ["a,b", "1,0.5", "2,0.25"]
