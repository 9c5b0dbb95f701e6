import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from lowdim.cli import RunConfig, load_config, main, parse_int_list
from lowdim.errors import ValidationError

FAST = ["--epochs", "1", "--n-train", "100", "--n-test", "50"]


def test_empty_config_gives_defaults(tmp_path):
    (tmp_path / "empty.cfg").write_text("")
    cfg = load_config(tmp_path / "empty.cfg")
    assert cfg == RunConfig()
    assert cfg.lr == 0.001 and cfg.train_config("setmax").batch_size == 64
    assert cfg.train_config("objcomp").epochs == 20
    mr = cfg.train_config("minirpm")
    assert mr.epochs > 20 and mr.batch_size > 64 and mr.betas == (0.9, 0.999)


def test_file_values_and_flag_override(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("task = objcomp\nlr = 0.01\nseeds = 0-2,7\nproj-dim = 2\nclip_norm = none\n")
    cfg = load_config(path)
    assert (cfg.task, cfg.lr, cfg.seeds, cfg.proj_dim, cfg.clip_norm) == ("objcomp", 0.01, (0, 1, 2, 7), 2, None)
    assert load_config(path, {"lr": "0.5", "beta": None}).lr == 0.5
    path.write_text("[run]\nattr = colour\n")
    assert load_config(path).attr == ("colour",)


@pytest.mark.parametrize("text", ["lr = -1\n", "bogus = 1\n", "epochs = many\n", "[other]\nx = 1\n",
                                  "beta = 1.5\n", "seeds = 1-0\n", "no equals sign here\n"])
def test_bad_configs_rejected(tmp_path, text):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(ValidationError):
        load_config(path)


def test_parse_int_list():
    assert parse_int_list("0-3, 5") == (0, 1, 2, 3, 5)
    with pytest.raises(ValidationError):
        parse_int_list("-1")


def test_ten_seeds_give_ten_rows_and_aggregates(tmp_path, capsys):
    out = tmp_path / "r"
    assert main(["setmax", "--model", "comparator", "--seeds", "0-9", *FAST, "--out-dir", str(out)]) == 0
    rows = list(csv.DictReader(open(out / "metrics.csv")))
    per_seed = [r for r in rows if r["seed"] not in ("mean", "std")]
    assert len(per_seed) == 10 and {r["seed"] for r in per_seed} == {str(s) for s in range(10)}
    assert [r["seed"] for r in rows[10:]] == ["mean", "std"]
    report = json.loads((out / "report.json").read_text())
    assert report["aggregate"][0]["n"] == 10
    vals = np.array([r["test_mse"] for r in report["rows"]])
    assert report["aggregate"][0]["test_mse_mean"] == pytest.approx(vals.mean(), rel=1e-12, abs=1e-12)
    assert report["aggregate"][0]["test_mse_std"] == pytest.approx(vals.std(), rel=1e-12, abs=1e-12)
    assert "test_mse_mean" in capsys.readouterr().out


def test_repeated_runs_are_byte_identical(tmp_path):
    for d in ("a", "b"):
        assert main(["objcomp", "--attr", "colour", "--seeds", "0,1", *FAST, "--out-dir", str(tmp_path / d)]) == 0
    for name in ("report.json", "metrics.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_invalid_run_exits_nonzero(tmp_path, capsys):
    assert main(["setmax", "--lr", "-1", "--out-dir", str(tmp_path)]) == 1
    assert "lr must be positive" in capsys.readouterr().err
    assert main(["setmax", "--model", "lstm", *FAST, "--out-dir", str(tmp_path)]) == 1


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "lowdim", "setmax", "--lr", "0"], capture_output=True, text=True)
    assert res.returncode == 1 and "error" in res.stderr


def test_save_then_load_params(tmp_path):
    common = ["setmax", "--model", "deepsets_max", *FAST]
    assert main([*common, "--save-params", str(tmp_path / "p"), "--out-dir", str(tmp_path / "a")]) == 0
    assert (tmp_path / "p" / "setmax-deepsets_max-seed0.npz").exists()
    assert main([*common, "--epochs", "0", "--load-params", str(tmp_path / "p"), "--out-dir", str(tmp_path / "b")]) == 0
    a = json.loads((tmp_path / "a" / "report.json").read_text())["rows"][0]
    b = json.loads((tmp_path / "b" / "report.json").read_text())["rows"][0]
    assert a["test_mse"] == b["test_mse"]
    assert main([*common, "--load-params", str(tmp_path / "missing"), "--out-dir", str(tmp_path / "c")]) == 1


def test_minirpm_run(tmp_path):
    assert main(["minirpm", "--num-proj", "2", "--width-mult", "0.01", "--epochs", "1", "--n-train", "20",
                 "--n-test", "10", "--out-dir", str(tmp_path)]) == 0
    models = {r["model"] for r in json.loads((tmp_path / "report.json").read_text())["rows"]}
    assert models == {"comparator", "baseline"}


@pytest.mark.parametrize("analysis", ["exports", "prune", "msweep"])
def test_analyze_runs(tmp_path, analysis):
    args = ["analyze", "--analysis", analysis, "--attr", "size", "--m-grid", "50,100", "--proj-dim", "2", *FAST,
            "--out-dir", str(tmp_path)]
    assert main(args) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    for rel in report["artifacts"].values():
        assert (tmp_path / rel).exists()
    if analysis == "exports":
        header = (tmp_path / "scatter_size_seed0.csv").read_text().splitlines()[0]
        assert header == "x,y,latent,split"
    if analysis == "prune":
        assert {r["model"] for r in report["rows"]} == {"comparator", "baseline", "baseline_pruned"}


def test_ablate_run(tmp_path):
    assert main(["ablate", "--parameter", "projection_dim", "--values", "1,2", "--attr", "colour", *FAST,
                 "--out-dir", str(tmp_path)]) == 0
    lines = (tmp_path / "sweep.csv").read_text().splitlines()
    assert lines[0] == "param,value,seed,model,metric,score"
    assert any(",hausdorff," in line for line in lines)
    assert main(["ablate", "--parameter", "dropout", "--out-dir", str(tmp_path)]) == 1
