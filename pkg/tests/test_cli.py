import json
import subprocess
import sys

import numpy as np
import pytest

from fwals.cli import main, parse_grid
from fwals import ConfigError


@pytest.fixture
def data_csv(tmp_path):
    rng = np.random.default_rng(0)
    N = 60
    X = rng.standard_normal((N, 4))
    y = X @ [0.5, 0.3, 0.2, 0.1] + rng.standard_normal(N)
    path = tmp_path / "data.csv"
    rows = ["y,a,b,c,d"] + [",".join(repr(float(v)) for v in [y[i], *X[i]]) for i in range(N)]
    path.write_text("\n".join(rows) + "\n")
    return str(path)


def run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_grid():
    assert parse_grid("0.1:0.9:9") == [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
    assert parse_grid("1,3:5:3", integer=True) == [1, 3, 4, 5]
    assert parse_grid("2.5") == [2.5]
    for bad in ("", "1:2", "a", "1:2:0"):
        with pytest.raises(ConfigError):
            parse_grid(bad)
    with pytest.raises(ConfigError):
        parse_grid("1.5", integer=True)


def test_estimate_json(capsys, data_csv):
    code, out, _ = run(capsys, ["estimate", "--data", data_csv, "--core", "a,b", "--aux", "c,d",
                                "--y", "y", "--methods", "fwals,fic,wals_lap"])
    assert code == 0
    doc = json.loads(out)
    assert doc["schema"] == "fwals/1"
    assert doc["focus"] == "linear:1,1"
    assert doc["dataset"]["N"] == 60 and doc["dataset"]["core"] == ["a", "b"]
    assert [r["method"] for r in doc["results"]] == ["fwals", "fic", "wals_lap"]
    code, out2, _ = run(capsys, ["estimate", "--data", data_csv, "--core", "1,2", "--aux", "3,4",
                                 "--y", "0", "--focus", "linear:1,1", "--methods",
                                 "fwals,fic,wals_lap"])
    drop_time = lambda d: [{k: v for k, v in r.items() if k != "seconds"} for r in d["results"]]
    assert drop_time(json.loads(out2)) == drop_time(doc)


def test_estimate_irf_focus_and_output_file(capsys, data_csv, tmp_path):
    target = tmp_path / "out.json"
    code, out, _ = run(capsys, ["estimate", "--data", data_csv, "--core", "a,b,c", "--aux", "d",
                                "--y", "y", "--focus", "irf:h=3", "--output", str(target)])
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["focus"] == "irf:h=3"


@pytest.mark.parametrize("argv,code,kind", [
    (["--core", "a,zz"], 3, "missing_column"),
    (["--methods", "nope"], 2, "config"),
    (["--focus", "linear:1"], 2, "domain"),
])
def test_estimate_errors(capsys, data_csv, argv, code, kind):
    base = {"--core": "a,b", "--aux": "c,d", "--y": "y"}
    args = ["estimate", "--data", data_csv]
    for k, v in base.items():
        if k not in argv:
            args += [k, v]
    got, out, err = run(capsys, args + argv)
    assert got == code and out == ""
    payload = json.loads(err)
    assert payload["error"]["exit_code"] == code
    assert payload["error"]["kind"].startswith(kind)


def test_parse_error_carries_location(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("y,a,b\n1,2,3\n1,x,3\n")
    code, _, err = run(capsys, ["estimate", "--data", str(path), "--core", "a", "--aux", "b",
                                "--y", "y"])
    assert code == 3
    e = json.loads(err)["error"]
    assert "row" in e and "col" in e


def test_simulate_basic_csv(capsys):
    code, out, _ = run(capsys, ["simulate", "basic", "--n", "40", "--r2", "0.3,0.6", "--reps",
                                "3", "--methods", "fwals,sbic"])
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "method,N,k1,k2,tau,r2,a,risk,mc_se,reps,n_failed"
    assert len(lines) == 5
    assert lines[1].startswith("fwals,40,3,2,0.3,0.3,12.0,")


def test_simulate_threads_env_and_determinism(capsys, monkeypatch):
    argv = ["simulate", "irf", "--k2", "2", "--cy", "1", "--reps", "4", "--h", "1,3",
            "--methods", "fwals,fic"]
    _, a, _ = run(capsys, argv)
    monkeypatch.setenv("FWALS_THREADS", "3")
    _, b, _ = run(capsys, argv)
    assert a == b and a.count("\n") == 5
    monkeypatch.setenv("FWALS_THREADS", "zero")
    code, _, err = run(capsys, argv)
    assert code == 2 and json.loads(err)["error"]["kind"].startswith("config")


def test_bench_cli(capsys):
    code, out, _ = run(capsys, ["bench", "--k2", "1,2", "--n", "30", "--methods", "fwals"])
    assert code == 0
    assert out.splitlines()[0] == "method,k2,mean_seconds,repeats,mu"
    assert len(out.splitlines()) == 3


def test_weight_curve(capsys):
    code, out, _ = run(capsys, ["weight-curve", "--t", "0.5,1,2"])
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == ("t,omega_theoretical,omega_laplace,omega_cauchy,omega_pareto,"
                        "omega_weibull")
    assert lines[2].startswith("1.0,0.5,")
    code, _, err = run(capsys, ["weight-curve", "--t=-1:1:3"])
    assert code == 2


def test_console_entry_point(data_csv):
    proc = subprocess.run([sys.executable, "-m", "fwals.cli", "weight-curve", "--t", "1"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.count("\n") == 2
