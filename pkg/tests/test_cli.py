import json
import os

import pytest

from asymflat.cli import main, parse_radii, ConfigError


def run(args, capsys):
    code = main(args)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_radii_dyadic():
    assert parse_radii("10:4") == [10.0, 20.0, 40.0, 80.0]
    assert parse_radii([5.0, 6.0, 7.0]) == [5.0, 6.0, 7.0]


def test_parse_radii_rejects_bad_specs():
    for bad in ("10", "0:5", "10:2", "a:b"):
        with pytest.raises(ConfigError):
            parse_radii(bad)
    with pytest.raises(ConfigError):
        parse_radii([3.0, 2.0, 4.0])


def test_mass_command_schwarzschild(capsys, tmp_path):
    code, out, err = run(["mass", "--n", "3", "--k", "1", "--m", "1.5",
                          "--radii", "20:4", "--level", "6", "--step", "1",
                          "--out", str(tmp_path)], capsys)
    assert code == 0
    assert "mass m_1" in out
    doc = json.loads((tmp_path / "mass.json").read_text())
    assert abs(doc["results"]["mass"]["limit"] - 1.5) < 1e-4


def test_mass_json_output_is_deterministic(capsys, tmp_path):
    args = ["mass", "--n", "3", "--m", "0.7", "--radii", "20:4",
            "--level", "6", "--step", "1"]
    d1, d2 = tmp_path / "a", tmp_path / "b"
    assert run(args + ["--out", str(d1)], capsys)[0] == 0
    assert run(args + ["--out", str(d2)], capsys)[0] == 0
    j1 = (d1 / "mass.json").read_bytes()
    j2 = (d2 / "mass.json").read_bytes()
    # the out path is not part of the payload, so the bytes must agree
    doc1 = json.loads(j1)
    doc2 = json.loads(j2)
    doc1["config"]["out"] = doc2["config"]["out"] = None
    assert doc1 == doc2


def test_csv_output(capsys, tmp_path):
    code, *_ = run(["mass", "--n", "3", "--radii", "20:4", "--level", "6",
                    "--step", "1", "--format", "both", "--out", str(tmp_path)],
                   capsys)
    assert code == 0
    lines = (tmp_path / "mass.csv").read_text().splitlines()
    assert lines[0] == "quantity,r,value"
    assert any(row.split(",")[1] == "limit" for row in lines[1:])


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 3, "m": 2.0, "radii": "20:4",
                               "level": 6, "step": 1.0}))
    code, out, _ = run(["mass", "--config", str(cfg), "--m", "0.5",
                        "--out", str(tmp_path)], capsys)
    assert code == 0
    doc = json.loads((tmp_path / "mass.json").read_text())
    assert abs(doc["results"]["mass"]["limit"] - 0.5) < 1e-4


def test_unknown_config_key_exits_1(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    code, _, err = run(["mass", "--config", str(cfg)], capsys)
    assert code == 1
    assert "unknown key" in err


def test_invalid_flag_value_exits_1(capsys):
    code, _, err = run(["mass", "--n", "9"], capsys)
    assert code == 1
    assert "error" in err


def test_center_command(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 3, "m": 1.0, "center": [0.5, 0.0, 0.0],
                               "radii": "20:5", "level": 6, "step": 1.0}))
    code, out, _ = run(["center", "--config", str(cfg), "--out", str(tmp_path)],
                       capsys)
    assert code == 0
    doc = json.loads((tmp_path / "center.json").read_text())
    assert abs(doc["results"]["center[0]"]["limit"] - 0.5) < 1e-4


def test_verify_command(capsys):
    code, out, _ = run(["verify", "--n", "3"], capsys)
    assert code == 0
    assert "PASS" in out
    assert "FAIL" not in out


def test_rtcheck_command_pass_and_fail(capsys):
    code, out, _ = run(["rtcheck", "--metric", "rt", "--n", "3", "--tau", "1",
                        "--seed", "1", "--radii", "10:5", "--ell", "1"], capsys)
    assert code == 0
    assert "PASS" in out
    # odd perturbation at the full rate violates the parity condition
    code, out, _ = run(["rtcheck", "--metric", "rt", "--n", "3", "--tau", "1",
                        "--seed", "1", "--radii", "10:5", "--ell", "0",
                        "--strict"] + ["--config", "/dev/null"], capsys)
    # /dev/null is not valid JSON: config errors exit 1
    assert code == 1


def test_rtcheck_strict_failure_exits_2(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"metric": "rt", "n": 3, "tau": 1.0, "seed": 1,
                               "parity": "odd", "radii": "10:5", "ell": 0}))
    code, out, _ = run(["rtcheck", "--config", str(cfg), "--strict"], capsys)
    assert code == 2
    assert "FAIL" in out


def test_invariance_command(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 3, "m": 1.0, "radii": "20:5", "level": 6,
                               "step": 1.0, "zeta": "harmonic", "zeta_c": 0.2,
                               "tau_prime": 1.0}))
    code, out, _ = run(["invariance", "--config", str(cfg)], capsys)
    assert code == 0
    assert "PASS" in out


def test_invariance_negative_control_strict(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": 3, "m": 1.0, "radii": "20:5", "level": 6,
                               "step": 1.0, "zeta": "radial", "zeta_c": 0.5,
                               "tau_prime": 0.3}))
    code, out, _ = run(["invariance", "--config", str(cfg), "--strict"], capsys)
    assert code == 2
    assert "DRIFT" in out
