import csv
import json
import os
import subprocess
import sys

import pytest

from susplab.cli import RunManifest, build_parser, run_cli

SUBCOMMANDS = ["road-gen", "rules-dump", "tune", "simulate", "compare"]

SMALL = """
[sim]
duration = 2.0
[tuning]
budget = 20
[cfoa]
pop_size = 4
max_iter = 4
[ga]
pop_size = 5
[pso]
swarm_size = 5
[bfo]
n_bacteria = 4
[foa]
pop_size = 5
[compare]
scenarios = zero:semi_active_zero, active:active, cfoa:semi_active_fuzzy_pid:CFOA
reference = zero
"""


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL)
    return path


@pytest.fixture(autouse=True)
def _no_env_seed(monkeypatch):
    monkeypatch.delenv("SUSPLAB_SEED", raising=False)


def _declared(manifest_path):
    m = json.loads(manifest_path.read_text())
    return m, set(m["outputs"])


def _listing(root):
    return {str(p.relative_to(root)) for p in root.rglob("*") if p.is_file()}


@pytest.mark.parametrize("cmd", SUBCOMMANDS)
def test_help_lists_every_flag_with_default(cmd, capsys):
    assert run_cli([cmd, "--help"]) == 0
    text = capsys.readouterr().out
    sub = build_parser()._subparsers._group_actions[0].choices[cmd]
    for action in sub._actions:
        if action.option_strings and action.dest != "help":
            assert action.option_strings[0] in text
    assert text.count("(default:") == len(sub._actions) - 1


def test_usage_errors(tmp_path, capsys):
    assert run_cli([]) == 1
    assert run_cli(["fly"]) == 1
    assert run_cli(["simulate", "--bogus"]) == 1
    assert run_cli(["simulate", "--config", str(tmp_path / "missing.cfg")]) == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("[sim]\ndt = fast\n")
    assert run_cli(["simulate", "--config", str(bad)]) == 1
    assert run_cli(["simulate", "--gains", "1", "-1", "1", "--out", str(tmp_path / "o")]) == 1
    assert "error" in capsys.readouterr().err


def test_rules_dump(tmp_path):
    out = tmp_path / "r" / "rules.csv"
    assert run_cli(["rules-dump", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["vel_level", "acc_level", "dist_level", "out_level"]
    assert len(rows) == 730
    assert len({tuple(r[:3]) for r in rows[1:]}) == 729
    m, declared = _declared(out.with_name("rules.manifest.json"))
    assert declared == _listing(out.parent)


def test_simulate_bitwise_repeatable_and_declared(tmp_path, small_cfg):
    args = ["simulate", "--config", str(small_cfg), "--seed", "0", "--gains", "50", "50", "5"]
    assert run_cli(args + ["--out", str(tmp_path / "a")]) == 0
    assert run_cli(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("timeseries.csv", "metrics.csv", "gains.csv", "a_s.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    m, declared = _declared(tmp_path / "a" / "manifest.json")
    assert declared == _listing(tmp_path / "a")
    assert m["seeds"]["seed"] == 0 and m["parameters"]["sim"]["duration"] == 2.0
    data = (tmp_path / "a" / "timeseries.csv").read_bytes()
    assert b"\r" not in data and data.count(b"\n") == 2002


def test_simulate_without_gains_tunes(tmp_path, small_cfg):
    out = tmp_path / "s"
    assert run_cli(["simulate", "--config", str(small_cfg), "--out", str(out)]) == 0
    assert (out / "gains.csv").read_text().startswith("kp,ki,kd,score\n")


def test_seed_env_override(tmp_path, monkeypatch):
    base = ["road-gen", "--duration", "1"]
    assert run_cli(base + ["--seed", "7", "--out", str(tmp_path / "flag")]) == 0
    monkeypatch.setenv("SUSPLAB_SEED", "7")
    assert run_cli(base + ["--out", str(tmp_path / "env")]) == 0
    monkeypatch.setenv("SUSPLAB_SEED", "8")
    assert run_cli(base + ["--out", str(tmp_path / "other")]) == 0
    flag = (tmp_path / "flag" / "road.csv").read_bytes()
    assert (tmp_path / "env" / "road.csv").read_bytes() == flag
    assert (tmp_path / "other" / "road.csv").read_bytes() != flag
    m, declared = _declared(tmp_path / "env" / "manifest.json")
    assert m["seeds"]["road"] == 7
    assert declared == _listing(tmp_path / "env")


def test_tune_outputs(tmp_path, small_cfg):
    out = tmp_path / "t"
    assert run_cli(["tune", "--config", str(small_cfg), "--method", "PSO", "--out", str(out)]) == 0
    _, declared = _declared(out / "manifest.json")
    assert declared == _listing(out)
    assert (out / "convergence.csv").read_text().startswith("iteration,best_score\n")
    out = tmp_path / "zn"
    assert run_cli(["tune", "--method", "ZN", "--out", str(out)]) == 0
    assert _declared(out / "manifest.json")[1] == _listing(out)


def test_compare_small(tmp_path, small_cfg):
    out = tmp_path / "c"
    assert run_cli(["compare", "--config", str(small_cfg), "--out", str(out)]) == 0
    _, declared = _declared(out / "manifest.json")
    assert declared == _listing(out)
    text = (out / "comparison.txt").read_text()
    assert "reference: zero" in text and "%" in text
    rows = list(csv.DictReader((out / "comparison.csv").open()))
    assert [r["label"] for r in rows] == ["zero", "active", "cfoa"]


def test_compare_missing_reference(tmp_path, small_cfg, capsys):
    rc = run_cli(["compare", "--config", str(small_cfg), "--reference", "nope",
                  "--out", str(tmp_path / "c")])
    assert rc == 1
    assert "nope" in capsys.readouterr().err
    assert not (tmp_path / "c").exists()


def test_numeric_failure_exit_code(tmp_path):
    cfg = tmp_path / "div.cfg"
    cfg.write_text("[sim]\nduration = 2.0\npid_route = parallel\n")
    rc = run_cli(["simulate", "--config", str(cfg), "--gains", "1e9", "1e9", "1e9",
                  "--out", str(tmp_path / "d")])
    assert rc == 2


def test_replay_reproduces(tmp_path, small_cfg):
    out = tmp_path / "a"
    assert run_cli(["simulate", "--config", str(small_cfg), "--gains", "20", "20", "2",
                    "--out", str(out)]) == 0
    first = (out / "timeseries.csv").read_bytes()
    (out / "timeseries.csv").unlink()
    assert run_cli(["simulate", "--replay", str(out / "manifest.json")]) == 0
    assert (out / "timeseries.csv").read_bytes() == first
    assert RunManifest.read(out / "manifest.json").command == "simulate"
    small_cfg.write_text(SMALL + "\n[run]\nseed = 3\n")
    assert run_cli(["simulate", "--replay", str(out / "manifest.json")]) == 1


def test_console_script_entry_point(tmp_path):
    env = {k: v for k, v in os.environ.items() if k != "SUSPLAB_SEED"}
    proc = subprocess.run([sys.executable, "-m", "susplab", "rules-dump", "--out",
                           str(tmp_path / "r.csv")], capture_output=True, text=True, env=env)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "r.csv").exists()
