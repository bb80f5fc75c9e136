"""Command-line surface: exit codes, artifacts and configuration."""

import csv
import json
import shutil

import numpy as np
import pytest

from painleve_sigma.algebra.fixtures import data_path
from painleve_sigma.cli import SOLUTION_HEADER, RunConfig, main
from painleve_sigma.domain import Parameters


def _config(tmp_path, **over):
    data = {"parameters": {"nu1": 1, "nu3": 1, "nu4": 1, "C": 1},
            "grid": {"rho": 50, "n": 512}, "samples": 4}
    data.update(over)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return str(path)


def test_config_round_trip():
    cfg = RunConfig(parameters=Parameters(1 + 1j, 0.5, 2, -1j), C_list=[1, 1j]).effective()
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again.to_dict() == cfg.to_dict()


def test_bad_usage_exit_codes(tmp_path, capsys):
    assert main([]) == 64
    with pytest.raises(SystemExit) as e:
        main(["nonsense"])
    assert e.value.code == 64
    with pytest.raises(SystemExit) as e:
        main(["solve", "--tol", "abc"])
    assert e.value.code == 64
    bad = _config(tmp_path, parameters={"nu1": -1, "nu3": 1, "nu4": 1, "C": 1})
    assert main(["solve", "--config", bad, "--out", str(tmp_path)]) == 64
    assert main(["solve", "--config", _config(tmp_path, bogus=1), "--out", str(tmp_path)]) == 64


def test_solve_trivial(tmp_path):
    cfg = _config(tmp_path, parameters={"nu1": 1, "nu3": 1, "nu4": 1, "C": 0})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 0
    with open(tmp_path / "solution.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == SOLUTION_HEADER
    arr = np.array(rows[1:], dtype=float)
    assert not np.any(arr[:, 2:6])
    assert np.allclose(arr[:, 6], -arr[:, 0] + 1)


def test_solve_and_flags_override(tmp_path):
    cfg = _config(tmp_path)
    assert main(["solve", "--config", cfg, "--out", str(tmp_path), "--seed", "5", "--tol", "1e-11"]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["config"]["seed"] == 5 and rep["config"]["tol"] == 1e-11
    assert rep["status"] == "ok" and rep["exit_code"] == 0
    assert rep["oracle"]["max_rel_diff"] < 1e-6
    assert rep["certificate"]["seed"] == 5
    assert abs(rep["slope_fit"] + 3) < 0.1
    for name in ("convergence.json", "certificate.json", "solution.csv"):
        assert (tmp_path / name).exists()


def test_solve_small_rho(tmp_path):
    cfg = _config(tmp_path, grid={"rho": 2, "n": 512})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 3
    rep = json.loads((tmp_path / "report.json").read_text())
    assert "increase" in rep["message"]


def test_sweep(tmp_path):
    cfg = _config(tmp_path)
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path), "--C", "0,0.5,1,2"]) == 0
    rep = json.loads((tmp_path / "sweep.json").read_text())
    rows = rep["rows"]
    assert rep["failed"] == 0
    assert rows[0]["iterations"] == 0 and rows[0]["final_norm"] == 0
    norms = [r["final_norm"] for r in rows[1:]]
    assert norms == sorted(norms)
    assert all(abs(r["slope_fit"] + 3) < 0.1 for r in rows[1:])
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 64


def test_residual_subcommand(tmp_path):
    path = tmp_path / "in.csv"
    t = np.array([10.0, 100.0])
    with open(path, "w") as fh:
        fh.write("t_re,t_im,u_re,u_im,up_re,up_im,upp_re,upp_im\n")
        for v in t:
            fh.write(f"{v},0,{-v + 1},0,-1,0,0,0\n")
        fh.write("10,0,0,0,1,0,0,0\n")
    assert main(["residual", "--input", str(path), "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "residual.csv")))
    assert float(rows[0]["residual_abs"]) == 0 and float(rows[1]["residual_abs"]) == 0
    assert float(rows[2]["residual_rel"]) > 0
    assert main(["residual", "--out", str(tmp_path)]) == 64


def test_contraction_report(tmp_path):
    cfg = _config(tmp_path)
    assert main(["contraction-report", "--config", cfg, "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "contraction.json").read_text())
    assert [r["rho"] for r in rep["runs"]] == [50, 200]
    assert rep["law_holds"]


def test_verify_identities_fault_injection(tmp_path):
    src = tmp_path / "src"
    shutil.copytree(data_path("transcribed"), src)
    text = (src / "T1.expr").read_text()
    (src / "T1.expr").write_text(text.replace("n1", "(n1+1)", 1))
    assert main(["verify-identities", "--source-dir", str(src), "--out", str(tmp_path)]) == 2
    rep = json.loads((tmp_path / "identities.json").read_text())
    assert "T1_closed_form" in rep["failures"]
    bad = [r for r in rep["identities"] if r["name"] == "T1_closed_form"][0]
    assert bad["residual_count"] > 0 and bad["residual"]
