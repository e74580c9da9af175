import json
import subprocess
import sys

import pytest

from gamedyn.cli import main


def test_nash_game66(capsys):
    assert main(["nash", "--builder", "game66"]) == 0
    out = capsys.readouterr().out
    assert "x=(1/3, 1/3, 1/3, 0, 0, 0)" in out and "support={1,2,3}" in out
    assert "quasi_strict=True" in out and out.strip().endswith("unique")


def test_nash_game77_json(capsys, tmp_path):
    path = tmp_path / "certs.json"
    assert main(["nash", "--builder", "game77", "--eps", "1/100", "--json", str(path)]) == 0
    assert "x=(1/3, 1/3, 1/3, 0, 0, 0, 0)" in capsys.readouterr().out
    assert len(json.loads(path.read_text())) == 1


def test_nash_rps_cyclic(capsys):
    assert main(["nash", "--builder", "rps-cyclic", "--alpha", "3", "--beta", "1"]) == 0
    assert "x=(1/3, 1/3, 1/3)" in capsys.readouterr().out


def test_nash_game_file(capsys, tmp_path):
    from gamedyn.game import build_game_66

    path = tmp_path / "g.json"
    path.write_text(json.dumps(build_game_66().to_json()))
    assert main(["nash", "--game", str(path)]) == 0
    assert "unique" in capsys.readouterr().out


def test_bad_rational_and_guard(capsys):
    with pytest.raises(SystemExit):
        main(["nash", "--builder", "game77", "--eps", "abc"])
    assert main(["nash", "--builder", "game77", "--eps", "1/2"]) == 2


def test_shapley(capsys):
    assert main(["shapley", "--builder", "game66"]) == 0
    out = capsys.readouterr().out
    assert "face {4,5,6}" in out and "(0, 0, 0, 1/31, 5/31, 25/31)" in out
    assert main(["shapley", "--builder", "game66", "--face", "1", "2", "3"]) == 0
    assert "(1/13, 3/13, 9/13, 0, 0, 0)" in capsys.readouterr().out


def test_run_br66_writes_outputs(capsys, tmp_path):
    rc = main(["run", "br66", "--count", "3", "--seed", "7", "--T", "60", "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "converged_to_ST(ST456): 3/3" in out
    d = tmp_path / "br66"
    assert (d / "run_000.json").exists() and (d / "summary.json").exists()
    reports = [json.loads(line) for line in (d / "reports.jsonl").read_text().splitlines()]
    assert len(reports) == 3 and reports[0]["metadata"]["config"]["seed"] == 7
    assert json.loads((d / "config.json").read_text())["T"] == 60.0


def test_run_determinism(tmp_path):
    for sub in ("a", "b"):
        main(["run", "rps-br", "--count", "4", "--seed", "3", "--out", str(tmp_path / sub)])
    def load(sub):
        reps = [json.loads(line) for line in (tmp_path / sub / "rps-br" / "reports.jsonl").read_text().splitlines()]
        for r in reps:
            r["metadata"]["config"].pop("out_dir")
        return reps

    assert load("a") == load("b")


def test_run_config_file(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "perturb66", "count": 2, "runs_per_game": 3}))
    assert main(["run", "--config", str(cfg), "--seed", "5"]) == 0
    assert "converged_to_ST(ST456): 2/2" in capsys.readouterr().out


def test_run_failure_exit_status(capsys):
    # a 1-unit horizon is too short for the verdict
    assert main(["run", "br66", "--count", "2", "--T", "1"]) == 1


def test_run_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "br66", "bogus": 1}))
    assert main(["run", "--config", str(cfg)]) == 2


def test_decompose_check(capsys):
    assert main(["decompose-check", "--count", "2", "--T", "20"]) == 0
    assert "max discrepancy" in capsys.readouterr().out


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "gamedyn", "nash", "--builder", "game66"], capture_output=True, text=True)
    assert r.returncode == 0 and "unique" in r.stdout
