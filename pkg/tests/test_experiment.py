"""Tests for the experiment runner, logs, summaries, and the CLI surface."""

import json
import math

import numpy as np
import pytest
import yaml

from contractgame.cli import main as cli_main
from contractgame.experiment import (
    CSV_COLUMNS,
    ConfigError,
    SCHEMA_VERSION,
    config_from_dict,
    config_to_dict,
    evaluate_seed_dir,
    load_config,
    plot_export,
    read_log,
    run_experiment,
    summarize,
    write_log,
)

TINY = {
    "name": "tiny",
    "game": {"episode_length": 8},
    "objective": {"kind": "fix"},
    "trainer": {
        "batch_size": 16,
        "episode_length": 8,
        "minibatch_size": 16,
        "epochs_per_update": 1,
    },
    "seeds": [0, 1],
    "iterations": 2,
    "eval_window_fraction": 0.5,
}


def tiny_config(tmp_path, **overrides):
    doc = json.loads(json.dumps(TINY))  # deep copy
    doc.update(overrides)
    doc.setdefault("output_dir", str(tmp_path / doc["name"]))
    return config_from_dict(doc)


# -- config parsing ----------------------------------------------------------------


def test_defaults_match_training_setup():
    cfg = config_from_dict({"name": "paper"})
    assert cfg.trainer.lr_principal == 2e-4
    assert cfg.trainer.lr_agent == 5e-4
    assert cfg.trainer.batch_size == 1600
    assert cfg.trainer.episode_length == 100
    assert cfg.game.types == (1.25, 0.75)
    assert cfg.game.action_cost == 0.01
    assert cfg.seeds == (0, 1, 2)


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown top-level"):
        config_from_dict({"name": "x", "bogus": 1})
    with pytest.raises(ConfigError, match="unknown keys in game"):
        config_from_dict({"name": "x", "game": {"grids": 4}})
    with pytest.raises(ConfigError, match="unknown keys in trainer"):
        config_from_dict({"name": "x", "trainer": {"lr": 0.1}})


def test_invalid_values_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"name": "x", "seeds": []})
    with pytest.raises(ConfigError):
        config_from_dict({"name": "x", "seeds": [1, 1]})
    with pytest.raises(ConfigError):
        config_from_dict({"name": "x", "iterations": -1})
    with pytest.raises(ConfigError):
        config_from_dict({"name": "x", "game": {"grid_size": 1}})
    with pytest.raises(ConfigError):
        config_from_dict({"name": "x", "trainer": {"seed": 3}})


def test_config_round_trip(tmp_path):
    cfg = tiny_config(tmp_path)
    doc = config_to_dict(cfg)
    again = config_from_dict(doc)
    assert config_to_dict(again) == doc


def test_load_config_yaml(tmp_path):
    path = tmp_path / "exp.yaml"
    path.write_text(yaml.safe_dump(TINY))
    cfg = load_config(path)
    assert cfg.name == "tiny"
    bad = tmp_path / "bad.yaml"
    bad.write_text("::nonsense{")
    with pytest.raises(ConfigError):
        load_config(bad)


# -- logs ---------------------------------------------------------------------------


def sample_rows(n, seed=0, objective="fix", gini=0.9):
    return [
        {
            "iteration": i,
            "seed": seed,
            "objective": objective,
            "lambda": 0.0,
            "mean_alpha": 2 / 3,
            "reject_rate_red": 0.1,
            "reject_rate_blue": 0.2,
            "wealth_red": 10.0 + i,
            "wealth_blue": 9.0,
            "wealth_principal": 8.0,
            "welfare": 27.0 + i,
            "one_minus_gini": gini,
            "rawlsian": 8.0,
            "aie": gini * (27.0 + i),
            "kl_principal": 0.0,
            "entropy_red": 1.5,
            "entropy_blue": 1.4,
        }
        for i in range(n)
    ]


def test_log_round_trip(tmp_path):
    path = tmp_path / "log.csv"
    rows = sample_rows(3)
    rows[1]["one_minus_gini"] = math.nan  # sentinel must survive the trip
    write_log(path, rows)
    log = read_log(path)
    assert log["iteration"].tolist() == [0, 1, 2]
    assert log["objective"].tolist() == ["fix"] * 3
    assert log["wealth_red"].tolist() == [10.0, 11.0, 12.0]
    assert math.isnan(log["one_minus_gini"][1])
    assert not math.isnan(log["one_minus_gini"][0])


def test_read_log_rejects_other_schema(tmp_path):
    path = tmp_path / "log.csv"
    path.write_text("foo,bar\n1,2\n")
    with pytest.raises(ConfigError, match="schema"):
        read_log(path)


# -- running ------------------------------------------------------------------------


def test_run_experiment_artifacts(tmp_path):
    cfg = tiny_config(tmp_path)
    exp_dir, summary = run_experiment(cfg)
    for seed in (0, 1):
        seed_dir = exp_dir / f"seed_{seed}"
        assert (seed_dir / "log.csv").exists()
        assert (seed_dir / "checkpoint.npz").exists()
        snap = yaml.safe_load((seed_dir / "config_snapshot.yaml").read_text())
        assert snap["seeds"] == [seed]
    assert (exp_dir / "summary.json").exists()
    assert summary["schema_version"] == SCHEMA_VERSION
    assert summary["failed_seeds"] == []
    assert set(summary["metrics"]) == {"one_minus_gini", "welfare", "rawlsian", "aie"}
    assert len(summary["per_seed"]) == 2


def test_zero_iterations_header_only(tmp_path):
    cfg = tiny_config(tmp_path, iterations=0, seeds=[0])
    exp_dir, summary = run_experiment(cfg)
    content = (exp_dir / "seed_0" / "log.csv").read_text().splitlines()
    assert content == [",".join(CSV_COLUMNS)]
    assert any("insufficient data" in f for f in summary["flags"])
    assert (exp_dir / "seed_0" / "checkpoint.npz").exists()  # initial checkpoint


def test_byte_identical_reruns(tmp_path):
    cfg_a = tiny_config(tmp_path / "a")
    cfg_b = tiny_config(tmp_path / "b")
    dir_a, _ = run_experiment(cfg_a)
    dir_b, _ = run_experiment(cfg_b)
    for seed in (0, 1):
        log_a = (dir_a / f"seed_{seed}" / "log.csv").read_bytes()
        log_b = (dir_b / f"seed_{seed}" / "log.csv").read_bytes()
        assert log_a == log_b
        ck_a = (dir_a / f"seed_{seed}" / "checkpoint.npz").read_bytes()
        ck_b = (dir_b / f"seed_{seed}" / "checkpoint.npz").read_bytes()
        assert ck_a == ck_b


def test_snapshot_reproduces_log(tmp_path):
    cfg = tiny_config(tmp_path)
    exp_dir, _ = run_experiment(cfg)
    snap_doc = yaml.safe_load((exp_dir / "seed_1" / "config_snapshot.yaml").read_text())
    snap_doc["output_dir"] = str(tmp_path / "replay")
    replay_cfg = config_from_dict(snap_doc)
    replay_dir, _ = run_experiment(replay_cfg)
    original = (exp_dir / "seed_1" / "log.csv").read_bytes()
    replayed = (replay_dir / "seed_1" / "log.csv").read_bytes()
    assert original == replayed


def test_parallel_matches_sequential(tmp_path):
    seq_dir, _ = run_experiment(tiny_config(tmp_path / "seq"))
    par_dir, _ = run_experiment(tiny_config(tmp_path / "par"), workers=2)
    for seed in (0, 1):
        assert (seq_dir / f"seed_{seed}" / "log.csv").read_bytes() == (
            par_dir / f"seed_{seed}" / "log.csv"
        ).read_bytes()


def test_failed_seed_recorded(tmp_path):
    import dataclasses

    cfg = tiny_config(tmp_path)
    # a trainer/env horizon mismatch passes config validation but fails at train time
    broken = dataclasses.replace(
        cfg,
        trainer=dataclasses.replace(cfg.trainer, episode_length=4, batch_size=16, minibatch_size=8),
    )
    exp_dir, summary = run_experiment(broken)
    assert summary["failed_seeds"] == [0, 1]
    assert (exp_dir / "seed_0" / "error.txt").exists()


# -- evaluation and summaries ---------------------------------------------------------


def fake_seed_dir(tmp_path, seed, rows):
    d = tmp_path / f"seed_{seed}"
    d.mkdir(parents=True, exist_ok=True)
    write_log(d / "log.csv", rows)
    return d


def test_evaluate_seed_dir_window(tmp_path):
    d = fake_seed_dir(tmp_path, 0, sample_rows(10))
    info = evaluate_seed_dir(d, eval_window_fraction=0.2)
    assert info["window"] == 2
    # last two welfare values are 35 and 36
    assert info["welfare"] == pytest.approx(35.5)
    assert info["flags"] == []


def test_evaluate_seed_dir_flags_nan(tmp_path):
    rows = sample_rows(4, gini=math.nan)
    d = fake_seed_dir(tmp_path, 0, rows)
    info = evaluate_seed_dir(d, eval_window_fraction=0.5)
    assert any("one_minus_gini undefined" in f for f in info["flags"])
    assert math.isnan(info["one_minus_gini"])


def test_summarize_table_and_json(tmp_path):
    dirs = []
    for name, gini in (("fix", 0.9), ("vr_1", 0.99)):
        cfg = tiny_config(tmp_path / name, name=name)
        exp_dir, _ = run_experiment(cfg)
        dirs.append(exp_dir)
    text, table = summarize(dirs)
    assert "1 - Gini" in text and "Welfare" in text
    assert set(table["experiments"]) == {"fix", "vr_1"}
    for entry in table["experiments"].values():
        assert set(entry["metrics"]) == {"one_minus_gini", "welfare", "rawlsian", "aie"}


def test_summarize_flags_gini_sentinel(tmp_path):
    """A run whose window hits the NaN gini sentinel renders as flagged/omitted."""
    import dataclasses

    from contractgame.experiment import build_summary

    cfg = tiny_config(tmp_path, name="broke", seeds=[0])
    exp_dir = tmp_path / "broke_exp"
    rows = sample_rows(6, objective="greedy", gini=math.nan)
    for row in rows:  # exploited agents: negative wealth drives mean below zero
        row["wealth_red"], row["wealth_blue"], row["wealth_principal"] = -1.0, -1.0, 1.0
        row["aie"] = math.nan
    fake_seed_dir(exp_dir, 0, rows)
    summary = build_summary(dataclasses.replace(cfg, output_dir=str(exp_dir)), exp_dir, {})
    (exp_dir / "summary.json").write_text(json.dumps(summary))
    assert any("one_minus_gini undefined" in f for f in summary["flags"])
    text, table = summarize([exp_dir])
    assert "--" in text  # the undefined cell is omitted, not faked
    assert "flagged" in text


def test_summarize_rejects_schema_mismatch(tmp_path):
    cfg = tiny_config(tmp_path)
    exp_dir, _ = run_experiment(cfg)
    summary = json.loads((exp_dir / "summary.json").read_text())
    summary["schema_version"] = 999
    (exp_dir / "summary.json").write_text(json.dumps(summary))
    with pytest.raises(ConfigError, match="schema version"):
        summarize([exp_dir])


def test_identical_seeds_give_zero_std(tmp_path):
    """Seed dirs with identical logs aggregate to std exactly 0 per metric."""
    cfg = tiny_config(tmp_path, seeds=[0])
    exp_dir, summary = run_experiment(cfg)
    assert summary["metrics"]["welfare"]["std"] == 0.0


def test_identical_values_across_seeds_zero_std():
    from contractgame.experiment import _aggregate

    per_seed = {s: {"welfare": 27.5} for s in (0, 1, 2)}
    agg = _aggregate(per_seed, "welfare")
    assert agg["mean"] == 27.5
    assert agg["std"] == 0.0


def test_asymmetric_learning_rates_default():
    cfg = config_from_dict({"name": "x"})
    assert cfg.trainer.lr_principal < cfg.trainer.lr_agent


def test_plot_export_bundle(tmp_path):
    cfg = tiny_config(tmp_path)
    exp_dir, _ = run_experiment(cfg)
    bundle = plot_export([exp_dir], tmp_path / "bundle")
    manifest = json.loads((bundle / "manifest.json").read_text())
    assert manifest["schema_version"] == SCHEMA_VERSION
    entry = manifest["experiments"][0]
    assert entry["name"] == "tiny"
    for seed in ("0", "1"):
        assert (bundle / entry["logs"][seed]).exists()
        assert (bundle / entry["checkpoints"][seed]).exists()
    assert (bundle / entry["summary"]).exists()


# -- CLI ----------------------------------------------------------------------------


def write_tiny_yaml(tmp_path, **overrides):
    doc = json.loads(json.dumps(TINY))
    doc.update(overrides)
    doc["output_dir"] = str(tmp_path / "out")
    path = tmp_path / "exp.yaml"
    path.write_text(yaml.safe_dump(doc))
    return path


def test_cli_run_and_summarize(tmp_path, capsys):
    path = write_tiny_yaml(tmp_path)
    assert cli_main(["run", str(path), "--deterministic"]) == 0
    out = capsys.readouterr().out
    assert "experiment written" in out
    assert cli_main(["summarize", str(tmp_path / "out")]) == 0
    assert "Welfare" in capsys.readouterr().out


def test_cli_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("name: x\nbogus: 1\n")
    assert cli_main(["run", str(bad)]) == 2
    assert "config error" in capsys.readouterr().err
    assert cli_main(["run", str(tmp_path / "missing.yaml")]) == 2
    capsys.readouterr()


def test_cli_seed_failure_exit_code(tmp_path, capsys):
    path = write_tiny_yaml(tmp_path, trainer={
        "batch_size": 16, "episode_length": 4, "minibatch_size": 8,
        "epochs_per_update": 1,
    })
    assert cli_main(["run", str(path)]) == 1
    capsys.readouterr()


def test_cli_oracle(tmp_path, capsys):
    from test_oracle import FIXTURE

    assert cli_main(["oracle", str(FIXTURE)]) == 0
    out = capsys.readouterr().out
    assert "limited liability" in out and "OK" in out
    assert "IR violations under best response: 0" in out


def test_cli_plot_export(tmp_path, capsys):
    path = write_tiny_yaml(tmp_path)
    assert cli_main(["run", str(path)]) == 0
    assert cli_main(["plot-export", str(tmp_path / "out"), "-o", str(tmp_path / "bundle")]) == 0
    assert (tmp_path / "bundle" / "manifest.json").exists()
    capsys.readouterr()


def test_output_root_env_var(tmp_path, monkeypatch):
    monkeypatch.setenv("CONTRACTGAME_OUTPUT", str(tmp_path / "envroot"))
    doc = json.loads(json.dumps(TINY))
    doc["seeds"] = [0]
    doc["iterations"] = 1
    cfg = config_from_dict(doc)
    exp_dir, _ = run_experiment(cfg)
    assert exp_dir == tmp_path / "envroot" / "tiny"
    assert (exp_dir / "seed_0" / "log.csv").exists()
