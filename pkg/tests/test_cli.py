import json
import subprocess
import sys

import pytest

from pgcaps.cli import main
from pgcaps.fileio import read_cap, read_code, read_json, read_trace

REPORT_KEYS = {"n": int, "k": int, "d": (int, type(None)), "t": (int, type(None)),
               "R": (int, type(None)), "quasi_perfect": bool, "mu": (float, type(None)),
               "q": int, "m": int, "short": bool, "source_is_cap": bool, "source_complete": bool}


@pytest.fixture
def cwd(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_construct_verify_export(cwd, capsys):
    assert main(["construct", "--dim", "3", "--p", "3", "--seed", "7"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("complete cap: N=3 q=3 size=")
    assert "seed=7 stop=" in out
    cap = read_cap(cwd / "cap_N3_q3_s7.pgcap")
    header, rows = read_trace(cwd / "cap_N3_q3_s7.trace.jsonl")
    assert header["cap_size"] == len(cap) and len(rows) == header["steps"]

    assert main(["verify", "cap_N3_q3_s7.pgcap"]) == 0
    assert main(["export-code", "cap_N3_q3_s7.pgcap", "--out", "h.pgcode", "--report", "r.json"]) == 0
    rep = read_json(cwd / "r.json")
    assert set(rep) == set(REPORT_KEYS)
    for k, typ in REPORT_KEYS.items():
        assert isinstance(rep[k], typ), k
    assert rep["d"] == 4 and rep["R"] == 2 and rep["quasi_perfect"] is True
    assert read_code(cwd / "h.pgcode").n == len(cap)


def test_construct_prime_power(cwd, capsys):
    assert main(["construct", "--dim", "3", "--p", "2", "--k", "2", "--seed", "1",
                 "--format", "json", "--out", "a.pgcap", "--diagnostics", "d.json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["q"] == 4 and data["verified"] and data["diagnostics_finite"]
    assert (cwd / "a.trace.jsonl").exists() and isinstance(read_json(cwd / "d.json"), list)


def test_usage_errors(cwd, capsys):
    with pytest.raises(SystemExit) as e:
        main(["construct", "--p", "3"])
    assert e.value.code == 2
    assert "usage:" in capsys.readouterr().err
    for argv in (["construct", "--dim", "3", "--p", "4"],
                 ["construct", "--dim", "1", "--p", "3"],
                 ["construct", "--dim", "3", "--p", "3", "--theta", "2"],
                 ["construct", "--dim", "3", "--p", "3", "--sample-size", "0"],
                 ["trials", "--dim", "3", "--p", "3", "--trials", "0"]):
        assert main(argv) == 2
        err = capsys.readouterr().err
        assert err.count("\n") == 1 and err.startswith("pgcaps: error:")


def test_resource_limits(cwd):
    assert main(["construct", "--dim", "3", "--p", "3", "--max-points", "10"]) == 3
    assert main(["oracle", "--dim", "3", "--p", "7"]) == 3


def test_verify_failures(cwd, capsys):
    (cwd / "col.pgcap").write_text("PGCAP 1 2 2 3\n1 0 0\n0 1 0\n1 1 0\n")
    assert main(["verify", "col.pgcap"]) == 1
    assert "collinear" in capsys.readouterr().out
    (cwd / "tri.pgcap").write_text("PGCAP 1 2 2 3\n1 0 0\n0 1 0\n0 0 1\n")
    assert main(["verify", "tri.pgcap"]) == 1
    assert "(1, 1, 1)" in capsys.readouterr().out
    (cwd / "short.pgcap").write_text("PGCAP 1 2 2 3\n1 0 0\n")
    assert main(["verify", "short.pgcap"]) == 2
    assert "line 3" in capsys.readouterr().err
    assert main(["verify", "missing.pgcap"]) == 2


def test_oracle(cwd, capsys):
    assert main(["oracle", "--dim", "2", "--p", "2", "--out", "w.pgcap"]) == 0
    assert capsys.readouterr().out.strip() == "4"
    assert main(["verify", "w.pgcap"]) == 0
    capsys.readouterr()
    assert main(["oracle", "--dim", "3", "--p", "2", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["size"] == 5 and data["verified"]


def test_export_incomplete_flagged(cwd, capsys):
    (cwd / "tri.pgcap").write_text("PGCAP 1 2 2 3\n1 0 0\n0 1 0\n0 0 1\n")
    assert main(["export-code", "tri.pgcap"]) == 1
    rep = read_json(cwd / "tri.report.json")
    assert rep["R"] == 3 and not rep["quasi_perfect"] and not rep["source_complete"]
    assert (cwd / "tri.pgcode").exists()


def test_trials(cwd, capsys):
    assert main(["trials", "--dim", "3", "--p", "3", "--trials", "10", "--out", "a.json"]) == 0
    agg = read_json(cwd / "a.json")
    assert agg["trials"] == 10 and len(agg["per_trial"]) == 10
    assert [t["seed"] for t in agg["per_trial"]] == list(range(10))
    assert all(t["verified"] for t in agg["per_trial"])
    assert agg["size"]["min"] >= agg["trivial_lower_bound"]
    assert main(["trials", "--dim", "3", "--p", "3", "--trials", "10", "--out", "b.json",
                 "--jobs", "2"]) == 0
    assert (cwd / "a.json").read_bytes() == (cwd / "b.json").read_bytes()


def test_single_trial_aggregates(cwd):
    assert main(["trials", "--dim", "3", "--p", "5", "--trials", "1", "--seed", "4", "--out", "o.json"]) == 0
    agg = read_json(cwd / "o.json")
    t = agg["per_trial"][0]
    assert agg["size"] == {"mean": t["size"], "stddev": 0.0, "min": t["size"], "max": t["size"]}
    assert agg["steps"]["mean"] == t["steps"]


def test_console_entry_point(cwd):
    r = subprocess.run([sys.executable, "-m", "pgcaps.cli", "oracle", "--dim", "2", "--p", "3"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "4"
