import json
import re
import math

import numpy as np
import pytest

from ahmscatter.cli import main
from ahmscatter.config import ConfigError, RunConfig, from_dict, load_config


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# -- config -------------------------------------------------------------------------

def test_defaults():
    cfg = from_dict(None)
    assert cfg == RunConfig()
    assert cfg.metric.is_exact and cfg.integrator.rtol == 1e-10 and cfg.charts.x_sw == 0.1


def test_yaml_round_trip(tmp_path):
    p = tmp_path / "run.yaml"
    p.write_text("metric: {dimension: 2, kind: perturbed, epsilon: 0.1, bump_center: [0.5, 0]}\n"
                 "integrator: {rtol: 1.0e-9, t_max: 50}\n"
                 "shooting: {tol: 1.0e-10, rtol: 1.0e-11}\n"
                 "scan: {n_a: 4, R_values: [0.5]}\n"
                 "seed: 3\n")
    cfg = load_config(str(p))
    assert cfg.metric.dimension == 2 and cfg.metric.bump_center == (0.5, 0.0)
    assert cfg.integrator.rtol == 1e-9 and cfg.integrator.t_max == 50
    assert cfg.shooting.tol == 1e-10 and cfg.shooting.integrator.rtol == 1e-11
    assert cfg.scan.R_values == (0.5,) and cfg.seed == 3
    assert from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("doc, msg", [
    ({"metrc": {}}, "unknown top-level"),
    ({"metric": {"dim": 2}}, "unknown key"),
    ({"integrator": {"rtol": -1}}, "invalid 'integrator'"),
    ({"metric": {"kind": "sphere"}}, "invalid 'metric'"),
    ({"seed": "x"}, "seed"),
    ({"threads": 0}, "threads"),
    ({"charts": 3}, "mapping"),
])
def test_config_rejects(doc, msg):
    with pytest.raises(ConfigError, match=msg):
        from_dict(doc)


def test_env_fallback(tmp_path):
    p = tmp_path / "env.yaml"
    p.write_text("seed: 9\n")
    assert load_config(None, {"AHM_CONFIG": str(p)}).seed == 9
    assert load_config(None, {}).seed == 0
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.yaml"))


# -- trace --------------------------------------------------------------------------

def test_trace_vertical(capsys):
    code, out, _ = run(capsys, "trace", "--z", "1", "0", "--zeta", "-1", "0")
    assert code == 0
    lines = [json.loads(l) for l in out.splitlines()]
    assert list(lines[0]) == ["param", "chart", "side", "x", "y1", "xi", "eta1", "q_drift"]
    assert lines[-1]["event"] == "FaceHit"
    assert abs(lines[-1]["s_limit"]) < 1e-9
    r1 = [l for l in lines[:-1] if l["chart"] == "region1"]
    assert r1 and list(r1[0])[3:9] == ["s", "x", "y1", "sigma", "xit", "eta1"]
    assert max(l["q_drift"] for l in lines[:-1]) < 1e-8


def test_trace_sigma_zero(capsys):
    code, _, err = run(capsys, "trace", "--z", "1", "0", "--zeta", "-1", "0", "--sigma", "0")
    assert code == 1 and "sigma must be nonzero" in err


def test_trace_cap(capsys):
    code, out, _ = run(capsys, "trace", "--z", "1", "0", "--zeta", "-1", "0", "--t-max", "0.001")
    assert code == 2
    assert json.loads(out.splitlines()[-1])["event"] == "CapReached"


def test_trace_box_exit(capsys):
    code, out, _ = run(capsys, "trace", "--z", "1", "0", "--zeta", "1", "0")
    assert code == 3 and json.loads(out.splitlines()[-1])["bound"] == "x_max"


def test_trace_malformed(capsys):
    code, _, err = run(capsys, "trace", "--z", "1", "0", "3", "--zeta", "-1", "0")
    assert code == 1 and "needs 2 numbers" in err


def test_trace_is_deterministic(capsys, tmp_path):
    args = ["trace", "--z", "0.5", "0.2", "--zeta", "0.6", "1.1", "--kind", "perturbed", "--epsilon", "0.1"]
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()


# -- distance ----------------------------------------------------------------------

def test_distance_log2(capsys):
    code, out, _ = run(capsys, "distance", "--z", "1", "0", "--zp", "2", "0")
    rec = json.loads(out)
    assert code == 0 and abs(rec["r"] - math.log(2)) < 1e-8
    assert rec["converged"] and rec["abs_error"] < 1e-8


def test_distance_same_point(capsys):
    code, _, err = run(capsys, "distance", "--z", "1", "0", "--zp", "1", "0")
    assert code == 1 and "coincide" in err


def test_distance_perturbed(capsys):
    code, out, _ = run(capsys, "distance", "--z", "1", "0", "--zp", "2", "0.5", "--kind", "perturbed",
                       "--epsilon", "0.05")
    rec = json.loads(out)
    assert code == 0 and rec["converged"] and rec["residual"] < 1e-10
    assert "exact_r" not in rec


# -- sojourn / scatter ---------------------------------------------------------------

def test_sojourn_apex(capsys):
    code, out, _ = run(capsys, "sojourn", "--z", "1", "0")
    rec = json.loads(out)
    assert code == 0 and abs(rec["S_soj"] - 2 * math.log(2)) < 1e-6


def test_scatter_normalizes_with_warning(capsys):
    code, out, err = run(capsys, "scatter", "--z", "1", "0", "--zeta", "0", "2")
    assert code == 0 and "normalized" in err
    rec = json.loads(out)
    assert rec["zeta0"] == pytest.approx([0.0, 1.0])
    assert rec["y"][0] == pytest.approx(-1.0, abs=1e-9)


def test_scatter_sweep_is_monotone(capsys):
    code, out, _ = run(capsys, "scatter", "--z", "0.5", "0", "--sweep", "12")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "angle,y,y_prime,S_soj,s"
    tab = np.array([[float(v) for v in l.split(",")] for l in lines[1:]])
    assert len(tab) == 12
    assert np.all(np.diff(tab[:, 1]) < 0) and np.all(np.diff(tab[:, 2]) < 0)
    np.testing.assert_allclose(tab[:, 4], 0.0, atol=1e-8)


# -- scan-f ----------------------------------------------------------------------------

def test_scan_f_small(capsys, tmp_path):
    summ = tmp_path / "summary.json"
    code, out, _ = run(capsys, "scan-f", "--n-a", "4", "--n-b", "4", "--n-c", "2", "--R", "0.5", "0.25",
                       "--no-faces", "--summary", str(summ))
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "rho_L,rho_R,Ynorm,R,r,F,residual,iters"
    s = json.loads(summ.read_text())
    assert s["failures"] == 0 and s["max_abs_F_minus_exact"] < 1e-6
    assert len(lines) - 1 == 2 * s["nodes"]


def test_scan_f_empty(capsys):
    code, _, err = run(capsys, "scan-f", "--n-a", "0")
    assert code == 1 and "empty grid" in err


# -- verify ------------------------------------------------------------------------------

def test_verify_rejects_pathological_metric(capsys):
    code, out, _ = run(capsys, "verify", "--kind", "perturbed", "--epsilon", "10")
    assert code == 1
    assert "[FAIL] metric validation" in out and "small_perturbation: FAILED" in out


def test_other_commands_reject_pathological_metric(capsys):
    code, _, err = run(capsys, "distance", "--z", "1", "0", "--zp", "2", "0", "--kind", "perturbed",
                       "--epsilon", "10")
    assert code == 1 and "failed validation" in err


@pytest.mark.slow
def test_verify_default_passes(capsys):
    code, out, _ = run(capsys, "verify")
    assert code == 0, out
    assert out.splitlines()[-1] == "9/9 checks passed"
    assert not re.search(r"\(\d+\.\ds\)", out)   # no timings unless asked


def test_bad_config_file(capsys, tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("metric: {colour: red}\n")
    code, _, err = run(capsys, "distance", "--config", str(p), "--z", "1", "0", "--zp", "2", "0")
    assert code == 1 and "unknown key" in err


def test_flag_overrides_config(capsys, tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("metric: {dimension: 2}\n")
    code, out, _ = run(capsys, "distance", "--config", str(p), "--dimension", "1", "--z", "1", "0",
                       "--zp", "2", "0")
    assert code == 0


@pytest.mark.slow
def test_verify_tightened(capsys):
    code, out, _ = run(capsys, "verify", "--tighten", "100")
    assert code == 0, out
    # bounds shrink with the tolerances
    assert "hyperbolic distance oracle" in out and "bound=1.0e-10" in out
