import json
from pathlib import Path

import numpy as np
import pytest

from rmts.cli import main
from rmts.io import read_series

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _run(argv, tmp_path, name="out"):
    out = tmp_path / name
    code = main(argv + ["--out", str(out)])
    return code, (out.read_text() if out.exists() else None)


def test_simulate_sigma_noise_k5(tmp_path):
    code, _ = _run(["simulate", "--config", str(CONFIGS / "sigma_noise_k5.json")], tmp_path, "s.csv")
    assert code == 0
    s = read_series(tmp_path / "s.csv")
    assert s.values.shape == (50_001, 5)


def test_moments_symmetric_sd010(tmp_path):
    code, text = _run(["moments", "--config", str(CONFIGS / "symmetric_sd010.json")], tmp_path)
    assert code == 0
    rep = json.loads(text)
    assert rep["theory"]["expectation"] == [1.0] * 5
    assert all(round(v, 3) == 1.105 for v in rep["theory"]["variance"])
    assert round(rep["theory"]["covariance_mean"], 4) == 0.0101
    assert rep["seed"] == 1 and rep["config"]["seed"] == 1


@pytest.mark.parametrize("name,target,tol", [("symmetric_sd010.json", 1.105, 0.03),
                                             ("symmetric_sd025.json", 0.477, 0.02)])
def test_verify_cases(tmp_path, name, target, tol):
    code, text = _run(["verify", "--config", str(CONFIGS / name)], tmp_path)
    assert code == 0
    rep = json.loads(text)
    assert np.all(np.abs(np.array(rep["variance"]["simulation"]) - target) < tol)
    assert np.allclose(rep["variance"]["abs_diff"],
                       np.abs(np.array(rep["variance"]["theory"]) - rep["variance"]["simulation"]))


def test_verify_deterministic_model_is_exact(tmp_path):
    cfg = {"mode": "verify", "horizon": 3000, "initial": 2,
           "model": {"dim": 3, "lags": [{"mean": {"diag": 0.5, "offdiag": 0}, "std": 0}],
                     "noise": {"mean": 1, "std": 0}}}
    code, text = _run(["verify", "--config", _write(tmp_path, cfg)], tmp_path)
    assert code == 0
    rep = json.loads(text)
    for key in ("mean", "variance"):
        assert rep[key]["abs_diff"] == [0.0, 0.0, 0.0]
    assert rep["covariance_mean"]["abs_diff"] == 0.0


def test_fit_coupled_k3_short(tmp_path):
    cfg = json.loads((CONFIGS / "coupled_k3_powell.json").read_text())
    cfg["horizon"] = 5000
    code, text = _run(["fit", "--config", _write(tmp_path, cfg)], tmp_path)
    assert code == 0
    rep = json.loads(text)
    R = np.array(rep["estimate"]["R"])
    truth = np.full((3, 3), -0.1)
    np.fill_diagonal(truth, 0.5)
    assert np.max(np.abs(R - truth)) < 0.05
    assert rep["truth"]["R"] == truth.tolist()
    assert rep["optimizer"] == "powell" and rep["seed"] == 7


def test_fit_from_input_file(tmp_path):
    cfg = {"mode": "simulate", "horizon": 3000, "seed": 2,
           "model": {"dim": 1, "lags": [{"mean": 0.3, "std": 0.2}], "noise": {"mean": 1, "std": 0.5}}}
    assert main(["simulate", "--config", _write(tmp_path, cfg), "--out",
                 str(tmp_path / "s.csv")]) == 0
    cfg["input"] = str(tmp_path / "s.csv")
    code, text = _run(["fit", "--config", _write(tmp_path, cfg, "fit.json")], tmp_path)
    assert code == 0
    rep = json.loads(text)
    assert "truth" not in rep and rep["input"] == cfg["input"]
    assert abs(rep["estimate"]["R"][0][0] - 0.3) < 0.05


def test_rmexp_report(tmp_path):
    cfg = json.loads((CONFIGS / "rmexp_scalar.json").read_text())
    cfg["rmexp"]["paths"] = 5000
    code, text = _run(["rmexp", "--config", _write(tmp_path, cfg)], tmp_path)
    assert code == 0
    rep = json.loads(text)
    assert rep["log_y"]["mean"]["theory"] == -0.5
    assert abs(rep["log_y"]["mean"]["simulation"] + 0.5) < 0.1


def test_rmexp_matrix_report(tmp_path):
    cfg = {"mode": "rmexp", "model": {"dim": 2, "lags": [{"mean": 0.1, "std": 0.5}]},
           "rmexp": {"steps": 200, "paths": 2000}}
    code, text = _run(["rmexp", "--config", _write(tmp_path, cfg)], tmp_path)
    assert code == 0
    rep = json.loads(text)
    assert np.max(rep["mean"]["abs_diff"]) < 0.2


def test_byte_identical_reports(tmp_path):
    cfg = str(CONFIGS / "symmetric_sd025.json")
    _, a = _run(["verify", "--config", cfg, "--seed", "4"], tmp_path, "a")
    _, b = _run(["verify", "--config", cfg, "--seed", "4"], tmp_path, "b")
    assert a == b and json.loads(a)["seed"] == 4


def test_resolved_config_reproduces_run(tmp_path):
    _, a = _run(["verify", "--config", str(CONFIGS / "gue_scaled.json"), "--seed", "8"],
                tmp_path, "a")
    resolved = json.loads(a)["config"]
    _, b = _run(["verify", "--config", _write(tmp_path, resolved, "r.json")], tmp_path, "b")
    assert a == b


def test_csv_report_format(tmp_path):
    code, text = _run(["moments", "--config", str(CONFIGS / "goe_canonical.json"),
                       "--format", "csv"], tmp_path)
    assert code == 0
    rows = dict(line.split(",", 1) for line in text.splitlines()[1:])
    assert rows["theory.converges_var"] == "False"


def test_exit_codes(tmp_path, capsys):
    assert main(["moments", "--config", str(tmp_path / "missing.json")]) == 1
    assert main(["moments", "--config", _write(tmp_path, {"mode": "moments", "oops": 1})]) == 1
    assert "oops" in capsys.readouterr().err
    assert main(["nonsense", "--config", "x"]) == 1
    diverge = {"mode": "simulate", "horizon": 5000, "initial": 1,
               "model": {"dim": 2, "lags": [{"mean": 3}]}}
    assert main(["simulate", "--config", _write(tmp_path, diverge),
                 "--out", str(tmp_path / "d.csv")]) == 2
    degenerate = {"mode": "fit", "horizon": 10, "fit": {"init": [0, 0, 0, 0]},
                  "model": {"dim": 1, "lags": [{"mean": 0}]}}
    assert main(["fit", "--config", _write(tmp_path, degenerate, "g.json"),
                 "--out", str(tmp_path / "g")]) == 2
    short = {"mode": "verify", "horizon": 10, "model": {"dim": 1, "lags": [{"mean": 0.1}]}}
    assert main(["verify", "--config", _write(tmp_path, short, "v.json"),
                 "--out", str(tmp_path / "v")]) == 1


def test_stdout_default(tmp_path, capsys):
    cfg = {"mode": "simulate", "horizon": 3, "model": {"dim": 1, "lags": [{"mean": 0.5}],
                                                         "noise": {"mean": 1}}}
    assert main(["simulate", "--config", _write(tmp_path, cfg)]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "t,x1" and len(out) == 5
