import json

import pytest

from movebench import config as cfgmod
from movebench.cli import main
from movebench.datagen import read_dataset


def test_config_precedence(tmp_path):
    f = tmp_path / "c.cfg"
    f.write_text("# comment\nworld.dt = 0.05\npolicy.hidden = 64,32\nmotion.v_max=0.1\n")
    file_vals = cfgmod.load_config_file(f)
    s = cfgmod.resolve({**file_vals, "motion.v_max": "0.2"})
    assert s.world.dt == 0.05 and s.policy.hidden == (64, 32) and s.motion.v_max == 0.2
    assert s.policy.horizons.prediction == 4
    assert cfgmod.resolve({"policy.horizons.action": "2"}).policy.horizons.action == 2


def test_config_errors(tmp_path):
    with pytest.raises(cfgmod.ConfigFileError):
        cfgmod.resolve({"world.nope": "1"})
    with pytest.raises(cfgmod.ConfigFileError):
        cfgmod.resolve({"world.dt": "fast"})
    with pytest.raises(cfgmod.ConfigFileError):
        cfgmod.parse_config_text("just words")
    with pytest.raises(FileNotFoundError):
        cfgmod.load_config_file(tmp_path / "none.cfg")


def test_banner_lists_every_key():
    s = cfgmod.Settings()
    text = s.banner()
    for key in s.flat():
        assert key in text


def test_seed_env(monkeypatch):
    monkeypatch.setenv("MOVE_BENCH_SEED", "41")
    assert cfgmod.default_seed() == 41
    monkeypatch.delenv("MOVE_BENCH_SEED")
    assert cfgmod.default_seed() == 0


def test_missing_dataset_exit_2(tmp_path, capsys):
    missing = tmp_path / "missing.ds"
    assert main(["train", "--dataset", str(missing), "--out", str(tmp_path / "x.json")]) == 2
    err = capsys.readouterr().err.strip()
    assert str(missing) in err and "\n" not in err


def test_unknown_flag_and_bad_choice_exit_2(capsys):
    assert main(["gen", "--paradigm", "move", "--sampling", "dense", "--budget", "2000", "--out", "x", "--bogus"]) == 2
    assert main(["gen", "--paradigm", "teleport", "--sampling", "dense", "--budget", "2000", "--out", "x"]) == 2
    assert main(["repro", "--experiment", "triple", "--seeds", "a,b", "--out", "x"]) == 2


def test_missing_config_file_exit_2(tmp_path, capsys):
    cfg = tmp_path / "nope.cfg"
    assert main(["eval", "--checkpoint", "expert", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert str(cfg) in capsys.readouterr().err


def test_gen_twice_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.ds", tmp_path / "b.ds"
    argv = ["gen", "--paradigm", "move", "--sampling", "dense", "--budget", "2000", "--seed", "1", "--jobs", "1"]
    assert main(argv + ["--out", str(a)]) == 0
    assert main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    out = capsys.readouterr().out
    assert "world.dt = 0.04" in out and "seed = 1" in out
    ds = read_dataset(a)
    assert abs(ds.total_timesteps - 2000) <= 100


def test_seed_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("MOVE_BENCH_SEED", "1")
    a = tmp_path / "env.ds"
    b = tmp_path / "flag.ds"
    base = ["gen", "--paradigm", "static", "--sampling", "dense", "--budget", "1500", "--jobs", "1"]
    assert main(base + ["--out", str(a)]) == 0
    assert main(base + ["--seed", "1", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_train_and_eval_pipeline(tmp_path, capsys):
    ds, ck, ev = tmp_path / "d.ds", tmp_path / "p.json", tmp_path / "eval"
    assert main(["gen", "--paradigm", "static", "--sampling", "dense", "--budget", "1500", "--seed", "2", "--out", str(ds), "--jobs", "1"]) == 0
    assert main(["train", "--dataset", str(ds), "--policy", "bc", "--steps", "50", "--seed", "0", "--out", str(ck)]) == 0
    assert main(["eval", "--checkpoint", str(ck), "--grid", "3", "--episodes", "1", "--level", "1", "--seed", "0", "--out", str(ev), "--jobs", "1"]) == 0
    summary = json.loads((ev / "summary.json").read_text())
    # the (0.2, 0.2) cell sits on the fixed level-1 target and is skipped
    assert summary["attempts"] == 8 and summary["resolution"] == 3
    assert (ev / "heatmap.png").exists() and (ev / "heatmap.pgm").exists()
    out = capsys.readouterr().out
    assert "policy.steps = 50" in out and "eval.grid = 3" in out


def test_flag_beats_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("eval.grid = 7\neval.episodes = 1\n")
    out_dir = tmp_path / "ev"
    assert main(["eval", "--checkpoint", "expert", "--config", str(cfg), "--grid", "2", "--out", str(out_dir), "--no-figures", "--jobs", "1"]) == 0
    assert json.loads((out_dir / "summary.json").read_text())["resolution"] == 2


def test_repro_small(tmp_path, capsys):
    out = tmp_path / "rep"
    rc = main(["repro", "--experiment", "triple", "--budget", "1500", "--seeds", "1,2,3", "--policy", "bc", "--steps", "20",
               "--grid", "2", "--episodes", "1", "--out", str(out), "--jobs", "1"])
    assert rc == 0
    doc = json.loads((out / "comparison.json").read_text())
    assert [a["name"] for a in doc["arms"]] == ["static", "adc", "move"]
    assert all(len(a["runs"]) == 3 for a in doc["arms"])
    assert (out / "comparison.png").exists()
