import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from sqkd.adversary import EntangleMeasureAttack, save_attack_file
from sqkd.cli import main, read_config, UsageError


def run(tmp_path, *args):
    return main([*args, "--out-dir", str(tmp_path)])


def test_simulate_accept(tmp_path, capsys):
    assert run(tmp_path, "simulate", "--n", "64", "--seed", "3") == 0
    assert capsys.readouterr().out.startswith("Accept")
    doc = json.loads((tmp_path / "session.json").read_text())
    assert doc["schema_version"] == 1 and doc["key"]["length"] == 64
    rows = list(csv.DictReader((tmp_path / "transcript.csv").open()))
    assert len(rows) == doc["counts"]["photons"]


def test_simulate_abort(tmp_path):
    assert run(tmp_path, "simulate", "--attack", "intercept-resend", "--intercept-basis", "XX") == 2
    assert json.loads((tmp_path / "session.json").read_text())["verdict"] == "Abort"


def test_rotation_flags(tmp_path):
    assert run(tmp_path, "simulate", "--attack", "rotation", "--theta-p", "0.5",
               "--thresholds", "1", "1", "1") == 0
    doc = json.loads((tmp_path / "session.json").read_text())
    assert doc["attack"]["theta_p"] == 0.5
    assert doc["eve"]["holevo_bits"] > 0


def test_byte_identical_reruns(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["simulate", "--n", "32", "--seed", "9", "--attack", "double-cnot", "--out-dir", str(out)]) == 0
    for name in ("session.json", "transcript.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_outputs_confined(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["efficiency", "--out-dir", "out"]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["out"]
    assert sorted(p.name for p in (tmp_path / "out").iterdir()) == ["efficiency.json"]


@pytest.mark.parametrize("args", [
    ["simulate", "--n", "7"],
    ["simulate", "--delta", "-1"],
    ["simulate", "--attack", "laser"],
    ["simulate", "--bogus"],
    ["sweep", "--points", "0"],
    [],
])
def test_usage_errors(tmp_path, args, capsys):
    assert run(tmp_path, *args) == 1
    assert capsys.readouterr().err.startswith("sqkd: error:")


def test_insufficient_rounds_exit(tmp_path, capsys):
    seeds = [s for s in range(40)
             if run(tmp_path, "simulate", "--n", "16", "--delta", "0", "--mode", "montecarlo",
                    "--seed", str(s)) == 1]
    assert seeds
    assert "delta" in capsys.readouterr().err


def test_attack_file(tmp_path):
    good = tmp_path / "good.json"
    save_attack_file(EntangleMeasureAttack(0, 0), good)
    assert run(tmp_path, "simulate", "--n", "32", "--attack", f"file:{good}") == 0
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"probe_dim": 1, "forward": (2 * np.eye(4)).tolist()}))
    assert run(tmp_path, "simulate", "--attack", f"file:{bad}") == 1
    assert run(tmp_path, "verify", "--attack", f"file:{bad}") == 1


def test_verify(tmp_path, capsys):
    assert run(tmp_path, "verify", "--attack", "double-cnot", "--sweep-random", "10") == 0
    out = capsys.readouterr().out
    assert out.startswith("ConsistentWithTheorem1") and "violations=0" in out
    doc = json.loads((tmp_path / "robustness.json").read_text())
    assert doc["schema_version"] == 1 and doc["random_suite"]["violations"] == []


def test_verify_violation_exit(tmp_path):
    assert run(tmp_path, "verify", "--attack", "rotation", "--theta-p", "0.3", "--tol-detect", "1") == 3


def test_sweep(tmp_path):
    assert run(tmp_path, "sweep", "--family", "rotation-both", "--points", "5") == 0
    rows = list(csv.DictReader((tmp_path / "sweep.csv").open()))
    assert list(rows[0]) == ["param", "detection", "holevo_bits", "trace_distance"]
    assert len(rows) == 5 and float(rows[-1]["holevo_bits"]) == pytest.approx(2)


def test_efficiency(tmp_path, capsys):
    assert run(tmp_path, "efficiency") == 0
    out = capsys.readouterr().out
    for needle in ("Ref.[2]", "Ref.[18]", "proposed", "8.33%", "11.11%"):
        assert needle in out


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nn = 32\nseed = 4\nthresholds = 1 1 1\nattack = rotation\ntheta_p = 0.7\n")
    assert run(tmp_path, "simulate", "--config", str(cfg), "--seed", "5") == 0
    params = json.loads((tmp_path / "session.json").read_text())["params"]
    assert params["n"] == 32 and params["seed"] == 5 and params["thresholds"] == [1.0, 1.0, 1.0]


def test_config_errors(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("n 32\n")
    with pytest.raises(UsageError):
        read_config(str(cfg))
    assert run(tmp_path, "simulate", "--config", str(cfg)) == 1
    assert run(tmp_path, "simulate", "--config", str(tmp_path / "missing.cfg")) == 1


@pytest.mark.parametrize("sub", [[], ["simulate"], ["verify"], ["sweep"], ["efficiency"]])
def test_help(sub, capsys):
    with pytest.raises(SystemExit) as exc:
        main([*sub, "--help"])
    assert exc.value.code == 0
    assert "usage: sqkd" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "sqkd", "efficiency", "--out-dir", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "11.11%" in proc.stdout


def test_documented_invocations(tmp_path, capsys):
    common = ["--n", "128", "--delta", "0.1", "--seed", "7"]
    assert run(tmp_path, "simulate", *common, "--attack", "none") == 0
    assert capsys.readouterr().out.startswith("Accept rates=0/0/0 key=128 bits mismatch=0")
    assert run(tmp_path, "simulate", *common, "--attack", "intercept-resend") == 2
    assert capsys.readouterr().out.startswith("Abort")
    assert run(tmp_path, "verify", "--attack", "double-cnot") == 0
    assert capsys.readouterr().out.startswith("ConsistentWithTheorem1")
    assert run(tmp_path, "verify", "--attack", "rotation", "--theta-p", "0.3") == 0
    assert capsys.readouterr().out.startswith("Detectable")
