import json

import numpy as np
import pytest

from ipromp.cli import main
from ipromp.iplanner import load_schedule, load_trajectory_csv
from ipromp.promp import load_model


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.delenv("PROMP_PUSH_OUT", raising=False)
    return tmp_path / "out"


def test_demos_writes_hundred_demos(out):
    assert main(["demos", "--out", str(out)]) == 0
    data = json.loads((out / "demos.json").read_text())
    assert len(data["demos"]) == 100
    assert (out / "demos.csv").read_text().startswith("demo,nominal,t,x,y,z")


def test_train_from_saved_demos(out):
    assert main(["demos", "--out", str(out), "--samples-per-traj", "2"]) == 0
    assert main(["train", "--demos", str(out / "demos.json"), "--out", str(out)]) == 0
    m1, m2 = load_model(out / "mp1.json"), load_model(out / "mp2.json")
    assert (m1.k, m2.k) == (4, 5)
    assert m1.T == pytest.approx(0.85) and m2.T == pytest.approx(1.15)


def test_experiments(out):
    assert main(["experiment", "fig5", "--out", str(out)]) == 0
    assert sorted(p.name for p in (out / "fig5").iterdir()) == [
        "fig5_k10.csv", "fig5_k4.csv", "fig5_summary.csv"]
    assert main(["experiment", "fig6", "--out", str(out)]) == 0
    assert len(list((out / "fig6").glob("fig6?.csv"))) == 6


def test_plan_and_replay_c_iv(out, capsys):
    assert main(["plan", "--scene", "C_IV", "--out", str(out)]) == 0
    plan = json.loads((out / "plan.json").read_text())
    assert len(plan["directives"]) == 1
    assert len(load_schedule(out / "schedule.json")) == 5
    dist = load_trajectory_csv(out / "trajectory.csv")
    assert dist.times[-1] == pytest.approx(2.0)
    assert main(["replay", "--scene", "C_IV", "--plan-dir", str(out), "--out", str(out)]) == 0
    metrics = json.loads((out / "metrics.json").read_text())["C_IV"]
    assert all(m["contact"] for fid, m in metrics.items() if fid in plan["selected"])


def test_plan_repeat_prints_latency(out, capsys):
    assert main(["plan", "--scene", "C_V", "--repeat", "5", "--out", str(out)]) == 0
    last = capsys.readouterr().out.strip().splitlines()[-1]
    stats = json.loads(last)
    assert stats["iterations"] == 5 and stats["mean_s"] > 0 and stats["std_s"] >= 0


def test_plan_with_trained_models_and_naive(out):
    assert main(["train", "--out", str(out)]) == 0
    assert main(["plan", "--scene", "C_I", "--models", str(out), "--naive",
                 "--out", str(out / "naive")]) == 0
    sched = load_schedule(out / "naive" / "schedule.json")
    assert "pushable_updated" not in sched.provenance


def test_pick_cycle_row(out):
    assert main(["pick-cycle", "--scene", "C_IV,C_VI,C_II", "--out", str(out)]) == 0
    cycle = json.loads((out / "cycle.json").read_text())
    assert [c["ok"] for c in cycle] == [True, True, True]
    for a, b in zip(cycle, cycle[1:]):
        np.testing.assert_allclose(b["start"], a["goal"], atol=1e-4)


def test_env_and_flag_precedence(tmp_path, monkeypatch):
    monkeypatch.setenv("PROMP_PUSH_OUT", str(tmp_path / "env"))
    assert main(["demos", "--samples-per-traj", "1"]) == 0
    assert (tmp_path / "env" / "demos.json").exists()
    assert main(["demos", "--samples-per-traj", "1", "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "demos.json").exists()


def test_config_file(out, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"samples_per_traj": 3, "seed": 4, "out": str(out)}))
    assert main(["demos", "--config", str(cfg)]) == 0
    assert len(json.loads((out / "demos.json").read_text())["demos"]) == 30
    cfg.write_text(json.dumps({"colour": "red"}))
    assert main(["demos", "--config", str(cfg)]) == 2


@pytest.mark.parametrize("argv, code", [
    (["demos", "--samples-per-traj", "0"], 2),
    (["plan", "--scene", "C_XI"], 2),
    (["plan", "--repeat", "-1"], 2),
    (["plan", "--scene", "C_IV", "--target", "nope"], 2),
    (["replay", "--plan-dir", "/nonexistent/dir"], 4),
    (["demos", "--config", "/nonexistent/cfg.json"], 4),
    (["train", "--lambda", "0", "--k1", "20", "--h", "10"], 3),
])
def test_exit_codes(argv, code, out):
    assert main(argv + ["--out", str(out)]) == code
