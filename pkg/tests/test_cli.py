import json
import math
import subprocess
import sys
from pathlib import Path

import pytest

from bcclab.cli import run

INPUTS = Path(__file__).resolve().parents[1] / "docs" / "inputs"


def test_selftest(capsys):
    assert run(["selftest"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["result"]["passed"] and out["metadata"]["seed"] == 0


def test_unknown_subcommand(capsys):
    assert run(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err


def test_missing_subcommand(capsys):
    assert run([]) == 1


def test_bad_flag(capsys):
    assert run(["selftest", "--seed", "abc"]) == 1


def test_malformed_json_reports_position(tmp_path, capsys):
    bad = tmp_path / "q.json"
    bad.write_text('{\n  "w_z": [[1, 0], [0, 1]],\n  "q_u": [1.0,\n}\n')
    assert run(["exponent", str(bad)]) == 1
    err = capsys.readouterr().err
    assert "line 4" in err and "column" in err


def test_missing_field_named(tmp_path, capsys):
    q = tmp_path / "q.json"
    q.write_text(json.dumps({"w_z": [[1, 0], [0, 1]], "q_u": [1.0], "r_s": 0.5,
                             "r_p": 1.5, "r_c": 0.1}))
    assert run(["exponent", str(q)]) == 1
    assert "q_v_given_u" in capsys.readouterr().err


def test_bad_channel_field(tmp_path, capsys):
    q = tmp_path / "q.json"
    q.write_text(json.dumps({"w_z": [[0.5, 0.4]], "q_u": [1.0], "q_v_given_u": [[1.0]],
                             "r_s": 0.5, "r_p": 1.5, "r_c": 0.1}))
    assert run(["exponent", str(q)]) == 1
    assert "w_z" in capsys.readouterr().err


def test_exponent_identity_query(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert run(["exponent", str(INPUTS / "exponent_identity.json"), "-o", str(out)]) == 0
    rep = json.loads(out.read_text())["result"]["report"]
    assert rep["f_i_plus"] == pytest.approx(0.306853, abs=1e-6)
    assert "0.306853" in f"{rep['f_i_plus']:.6f}"


def test_budget_exit_code(capsys):
    assert run(["region", str(INPUTS / "region_bsc.json"), "--resolution", "64",
                "--budget", "10"]) == 2
    assert "budget" in capsys.readouterr().err


def test_region_csv(tmp_path):
    out = tmp_path / "r.csv"
    assert run(["region", str(INPUTS / "region_bsc.json"), "--mode", "bcc_equal",
                "--resolution", "16", "--format", "csv", "-o", str(out)]) == 0
    lines = out.read_text().splitlines()
    header = next(i for i, l in enumerate(lines) if not l.startswith("#"))
    assert lines[header] == "r_s,r_e,r_c,certificate"


def _simulate(tmp_path, workers, name):
    out = tmp_path / name
    code = run(["simulate", str(INPUTS / "simulate_noiseless.json"), "--format", "csv",
                "--force-mc", "--trials", "64", "--seed", "17", "--workers", str(workers),
                "-o", str(out)])
    assert code == 0
    return out.read_bytes()


def test_simulate_byte_identical_across_workers(tmp_path):
    assert _simulate(tmp_path, 1, "a.csv") == _simulate(tmp_path, 8, "b.csv")


def test_simulate_exact_noiseless(tmp_path):
    out = tmp_path / "s.json"
    assert run(["simulate", str(INPUTS / "simulate_noiseless.json"), "-o", str(out)]) == 0
    summary = json.loads(out.read_text())["result"]["summary"]
    assert summary["exact"] and summary["e_s"] == 0.0


def test_leakage_csv_schema(tmp_path):
    cfg = json.loads((INPUTS / "leakage_bsc03.json").read_text())
    cfg["n_list"] = [2, 4]
    cfg["pairs"] = 2
    inp = tmp_path / "l.json"
    inp.write_text(json.dumps(cfg))
    out = tmp_path / "l.csv"
    assert run(["leakage", str(inp), "--format", "csv", "-o", str(out)]) == 0
    rows = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert rows[0] == "n,rho,leakage_nats,equivocation_nats,bound_plus,bound_minus,seed"
    assert len(rows) == 3
    # 17 significant digits
    ln_s_plus = rows[1].split(",")[3]
    assert len(ln_s_plus.replace(".", "").lstrip("0")) <= 17


def test_verify_pa_hand_instance(capsys):
    assert run(["verify-pa", "--input", str(INPUTS / "pa_hand.json"), "--rho", "1"]) == 0
    rec = json.loads(capsys.readouterr().out)["result"]["records"][0]
    assert rec["lhs"] == pytest.approx(2.0) and rec["rhs"] == pytest.approx(3.0)


def test_verify_types_small(capsys):
    assert run(["verify-types", "--n-max", "3"]) == 0
    assert json.loads(capsys.readouterr().out)["result"]["passed"]


def test_no_csv_for_summary_only(capsys):
    assert run(["verify-types", "--n-max", "2", "--format", "csv"]) == 1


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bcclab", "selftest", "--format", "csv"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert "false" not in proc.stdout
