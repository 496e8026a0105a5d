import json

import numpy as np
import pytest

from coopaoa import QuboProblem, load_snapshots
from coopaoa.cli import default_config_text, load_config, main

SMALL_CONFIG = """
[grid]
num_elements = 8
num_bins = 48

[scene]
orientations_deg = 120, 225, 200
num_paths = 1
snr_db = inf

[anneal]
sweeps = 300
restarts = 3

[experiment]
trials = 2
methods = caim, aim
seed = 9
workers = 1
"""

TINY_CONFIG = """
[grid]
num_elements = 4
num_bins = 8

[scene]
orientations_deg = 30, -45
num_paths = 1
snr_db = inf

[anneal]
sweeps = 300
restarts = 3

[experiment]
seed = 4
workers = 1
"""


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL_CONFIG)
    return str(path)


@pytest.fixture
def tiny_cfg(tmp_path):
    path = tmp_path / "tiny.ini"
    path.write_text(TINY_CONFIG)
    return str(path)


def test_default_config_parses_back(tmp_path):
    path = tmp_path / "defaults.ini"
    path.write_text(default_config_text())
    cfg = load_config(path)
    assert cfg.num_bins == 720
    assert cfg.methods == ("caim", "aim", "l1")
    cfg.validate()


def test_simulate_writes_one_file_per_ap(tmp_path, small_cfg):
    out = tmp_path / "snaps"
    assert main(["simulate", "--config", small_cfg, "--out", str(out)]) == 0
    files = sorted(p.name for p in out.glob("snapshot_ap*.json"))
    assert files == ["snapshot_ap0.json", "snapshot_ap1.json", "snapshot_ap2.json"]
    assert (out / "scene.json").exists()
    snaps = load_snapshots(out)
    assert all(s.los_bin is not None for s in snaps)


def test_simulate_deterministic(tmp_path, small_cfg):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    main(["simulate", "--config", small_cfg, "--out", str(out1)])
    main(["simulate", "--config", small_cfg, "--out", str(out2)])
    for name in ("snapshot_ap0.json", "snapshot_ap1.json", "snapshot_ap2.json"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_build_qubo_roundtrip(tmp_path, tiny_cfg):
    out = tmp_path / "qubo.txt"
    assert main(["build-qubo", "--config", tiny_cfg, "--out", str(out)]) == 0
    problem = QuboProblem.load_text(out)
    assert problem.num_vars == 16
    problem.save_text(tmp_path / "again.txt")
    assert out.read_text() == (tmp_path / "again.txt").read_text()


def test_solve_caim_outputs_and_brute_force_verification(tmp_path, tiny_cfg):
    out = tmp_path / "solve"
    code = main(
        ["solve", "--config", tiny_cfg, "--out", str(out), "--verify-brute-force"]
    )
    assert code == 0
    payload = json.loads((out / "estimates.json").read_text())
    assert payload["method"] == "caim"
    assert len(payload["estimates"]) == 2
    assert (out / "trace.csv").exists()


def test_solve_aim_matches_mu_zero_caim_on_clean_scene(tmp_path, tiny_cfg):
    out_aim = tmp_path / "aim"
    assert main(["solve", "--config", tiny_cfg, "--out", str(out_aim),
                 "--method", "aim"]) == 0
    mu0 = tmp_path / "mu0.ini"
    mu0.write_text(TINY_CONFIG + "\n[qubo]\nmu = 0.0\n")
    out_caim = tmp_path / "caim"
    assert main(["solve", "--config", str(mu0), "--out", str(out_caim)]) == 0
    est_aim = json.loads((out_aim / "estimates.json").read_text())["estimates"]
    est_caim = json.loads((out_caim / "estimates.json").read_text())["estimates"]
    assert [e["los_bin"] for e in est_aim] == [e["los_bin"] for e in est_caim]
    assert [e["detected_bins"] for e in est_aim] == [e["detected_bins"] for e in est_caim]
    assert (out_aim / "trace_ap0.csv").exists()


def test_solve_from_saved_snapshots(tmp_path, small_cfg):
    snaps_dir = tmp_path / "snaps"
    main(["simulate", "--config", small_cfg, "--out", str(snaps_dir)])
    out = tmp_path / "solve"
    assert main(["solve", "--config", small_cfg, "--out", str(out),
                 "--snapshots", str(snaps_dir)]) == 0
    payload = json.loads((out / "estimates.json").read_text())
    assert len(payload["estimates"]) == 3


def test_evaluate_byte_identical_reruns(tmp_path, small_cfg):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["evaluate", "--config", small_cfg, "--out", str(out1)]) == 0
    assert main(["evaluate", "--config", small_cfg, "--out", str(out2)]) == 0
    names = sorted(p.name for p in out1.iterdir())
    assert names == sorted(p.name for p in out2.iterdir())
    for name in names:
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_evaluate_method_override(tmp_path, small_cfg):
    out = tmp_path / "only_aim"
    assert main(["evaluate", "--config", small_cfg, "--out", str(out),
                 "--method", "aim"]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert list(summary["metrics"].keys()) == ["aim"]


def test_sweep_csv(tmp_path, tiny_cfg):
    cfg = tmp_path / "sweep.ini"
    cfg.write_text(
        TINY_CONFIG.replace("[experiment]", "[experiment]\ntrials = 1\nmethods = caim")
        + "\n[param_sweep]\ngammas = 1.0\nmus = 0.0, 1.0\ntrials = 1\n"
    )
    out = tmp_path / "sweep_out"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    lines = (out / "sweep_gamma_mu.csv").read_text().splitlines()
    assert lines[1] == "gamma,mu,trials,avg_median_caim_deg"
    assert len(lines) == 4


def test_print_config_echo(tmp_path, small_cfg, capsys):
    assert main(["evaluate", "--config", small_cfg, "--out",
                 str(tmp_path / "x"), "--print-config"]) == 0
    text = capsys.readouterr().out
    assert "num_bins = 48" in text
    assert "seed = 9" in text
    assert not (tmp_path / "x").exists()


def test_seed_override_changes_outputs(tmp_path, small_cfg, capsys):
    assert main(["evaluate", "--config", small_cfg, "--out",
                 str(tmp_path / "y"), "--print-config", "--seed", "123"]) == 0
    assert "seed = 123" in capsys.readouterr().out


def test_invalid_config_exits_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[anneal]\nsweeps = 0\n")
    assert main(["evaluate", "--config", str(bad), "--out", str(tmp_path / "z")]) == 2
    assert "configuration error" in capsys.readouterr().err
    missing = tmp_path / "missing.ini"
    assert main(["evaluate", "--config", str(missing), "--out", str(tmp_path / "z")]) == 2


def test_unknown_method_in_config_rejected(tmp_path, capsys):
    bad = tmp_path / "bad2.ini"
    bad.write_text("[experiment]\nmethods = music\n")
    assert main(["evaluate", "--config", str(bad), "--out", str(tmp_path / "z")]) == 2
