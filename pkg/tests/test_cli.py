import csv
import json
import subprocess
import sys

import numpy as np

from toda_toric.cli import main
from toda_toric.experiments import cmd_isospectral, cmd_roundtrip, format_csv


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def test_list(capsys):
    assert main(["--list"]) == 0
    out = capsys.readouterr().out
    for name in ("isospectral", "roundtrip", "limits", "embed", "billiard", "volume"):
        assert name in out


def test_check_valid_and_invalid(tmp_path, capsys):
    ok = _write(tmp_path, {"experiment": "roundtrip", "seed": 3, "samples": 5})
    assert main(["roundtrip", "--config", ok, "--check"]) == 0
    bad = _write(tmp_path, {"seed": 3, "bogus": 1}, "bad.json")
    assert main(["roundtrip", "--config", bad, "--check"]) == 1
    wrong = _write(tmp_path, {"seed": 3, "c_ladder": [1.0]}, "wrong.json")
    assert main(["limits", "--config", wrong, "--check"]) == 1
    assert main(["nope", "--seed", "1"]) == 1


def test_seed_required(tmp_path):
    cfg = _write(tmp_path, {"samples": 5})
    assert main(["roundtrip", "--config", cfg]) == 1
    assert main(["roundtrip", "--config", cfg, "--seed", "-1"]) == 1


def test_run_writes_report_and_csv(tmp_path, capsys):
    cfg = _write(tmp_path, {"n_values": [3], "samples": 5})
    out = tmp_path / "out"
    assert main(["roundtrip", "--config", cfg, "--seed", "11", "--out", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "PASS  roundtrip." in printed
    rep = json.loads((out / "report.json").read_text())
    assert rep["config"]["seed"] == 11 and rep["passed"] is True
    assert "+" in rep["version"] and "wall_clock_s" in rep["timing"]


def test_verdict_failure_exit_code(tmp_path):
    cfg = _write(tmp_path, {"n_values": [3], "samples": 5, "tolerances": {"relative_error": 0.0}})
    assert main(["roundtrip", "--config", cfg, "--seed", "2"]) == 2


def test_deterministic_bodies():
    cfg = {"seed": 5, "n": 3, "samples": 2, "T": 1.0}
    a, b = cmd_isospectral(cfg).as_dict(), cmd_isospectral(cfg).as_dict()
    a.pop("timing"), b.pop("timing")
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    r1 = cmd_roundtrip({"seed": 9, "n_values": [4], "samples": 3})
    r2 = cmd_roundtrip({"seed": 9, "n_values": [4], "samples": 3})
    assert r1.tables == r2.tables


def test_csv_format():
    text = format_csv(["case", "value"], [(0, 0.1), (1, np.float64(1 / 3))])
    rows = list(csv.reader(text.splitlines()))
    assert rows[0] == ["case", "value"]
    assert rows[1] == ["0", "1.0000000000000001e-01"]
    mant = rows[2][1].split("e")[0].replace(".", "")
    assert len(mant) == 17 and float(rows[2][1]) == 1 / 3


def test_corner_degenerate_exit_3(tmp_path, capsys):
    cfg = _write(tmp_path, {"initial_conditions": [[[0.0, 0.0, 0.0], [1.0, 0.0, -1.0]]],
                            "c_ladder": [20], "T": 2.0})
    assert main(["billiard", "--config", cfg, "--seed", "1"]) == 3
    assert "CornerDegeneracyError" in capsys.readouterr().err


def test_console_script_entry_point():
    r = subprocess.run([sys.executable, "-m", "toda_toric.cli", "--list"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0 and "volume" in r.stdout
