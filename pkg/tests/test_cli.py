import csv
import io
import json
import math

import pytest

from bergman_lab import cli


def _run(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_quotient_example(capsys):
    code, out, _ = _run(capsys, "quotient", "--p", "50", "--radius", "0.5")
    assert code == 0
    row = json.loads(out)["rows"][0]
    assert abs(row["Q"] - 1 / (2 * math.pi)) <= 1e-8
    assert row["t"] == pytest.approx(2 * math.log(2.0))


def test_log_radius_equivalent(capsys):
    _, a, _ = _run(capsys, "quotient", "--p", "30", "--radius", "0.25")
    _, b, _ = _run(capsys, "quotient", "--p", "30", "--log-radius", repr(math.log(0.25)))
    assert json.loads(a)["rows"][0]["Q"] == pytest.approx(json.loads(b)["rows"][0]["Q"], rel=1e-14)


def test_split_p2_zero_blocks(capsys):
    code, out, _ = _run(capsys, "split", "--p", "2", "--radius", "0.3")
    row = json.loads(out)["rows"][0]
    assert code == 0 and row["delta"] == 0
    assert row["I1"] == row["I2"] == row["I3"] == 0.0 and row["I4"] > 0


def test_coeffs_and_eval(capsys):
    code, out, _ = _run(capsys, "coeffs", "--p", "20", "--l-max", "3")
    assert code == 0 and "delta" in json.dumps(json.loads(out))
    code, out, _ = _run(capsys, "eval", "--p", "100", "--radius", "0.7", "--format", "csv")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 1 and float(rows[0]["p"]) == 100


def test_usage_errors(capsys, tmp_path):
    code, _, err = _run(capsys, "quotient", "--p", "50", "--radius", "0.5", "--log-radius", "-1")
    assert code == 2
    code, _, err = _run(capsys, "quotient", "--p", "50", "--radius", "1.5")
    assert code == 2 and "error" in err
    code, _, _ = _run(capsys, "quotient", "--p", "1", "--radius", "0.5")
    assert code == 2
    code, _, _ = _run(capsys, "quotient", "--radius", "0.5")
    assert code == 2
    code, _, _ = _run(capsys, "nonsense")
    assert code == 2
    code, _, _ = _run(capsys, "quotient", "--p", "50", "--radius", "0.5",
                      "--out", str(tmp_path / "missing" / "r.json"))
    assert code == 2
    code, _, _ = _run(capsys, "fuchsian", "--basis", str(tmp_path / "nope.json"))
    assert code == 2


def test_oracle_exit_status(capsys):
    code, out, _ = _run(capsys, "oracle", "--check", "norm", "--p", "10", "--l", "7", "--tol", "1e-10")
    assert code == 0 and json.loads(out)["rows"][0]["status"] == "pass"
    # the O(h^2) stencil error cannot meet this tolerance, so the check fails
    code, out, _ = _run(capsys, "oracle", "--check", "fd", "--p", "30", "--log-radius", "-10",
                        "--tol", "1e-14")
    assert code == 1 and json.loads(out)["rows"][0]["status"] == "fail"


def test_certify_status(capsys):
    code, out, _ = _run(capsys, "certify", "--p", "20", "--radius", "0.5", "--cert", "EQ30")
    assert code == 0 and json.loads(out)["rows"][0]["holds"] is True
    code, _, _ = _run(capsys, "certify", "--p", "20", "--radius", "0.5", "--cert", "EQ45")
    assert code == 2  # point outside the region the bound is stated on


def test_config_precedence(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"p": 30, "tol_nats": 60}))
    _, out, _ = _run(capsys, "quotient", "--config", str(cfg), "--radius", "0.5")
    assert json.loads(out)["rows"][0]["p"] == 30
    _, out, _ = _run(capsys, "quotient", "--config", str(cfg), "--p", "40", "--radius", "0.5")
    assert json.loads(out)["rows"][0]["p"] == 40
    cfg.write_text(json.dumps({"p": 30, "bogus": 1}))
    code, _, _ = _run(capsys, "quotient", "--config", str(cfg), "--radius", "0.5")
    assert code == 2
    cfg.write_text("[1, 2")
    code, _, _ = _run(capsys, "quotient", "--config", str(cfg), "--radius", "0.5")
    assert code == 2


def test_sweep_csv_and_json(capsys, tmp_path):
    args = ["sweep", "--p-list", "20", "40", "80", "--quantity", "FS_QUOTIENT", "--samples", "32"]
    code, out, _ = _run(capsys, *args, "--format", "csv")
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "p,region,quantity,sup_log,argmax_t" and len(lines) == 4
    path = tmp_path / "sweep.json"
    code, out, _ = _run(capsys, *args, "--out", str(path))
    assert code == 0 and out == ""
    rep = json.loads(path.read_text())
    assert rep["fit"]["mode"] == "power" and len(rep["tables"]) == 3
    code, _, _ = _run(capsys, "sweep", "--p-list", "40", "20", "--quantity", "FS_QUOTIENT")
    assert code == 2


def test_verify_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert cli.run(["verify", "--preset", "quick", "--out", str(a)]) == 0
    assert cli.run(["verify", "--preset", "quick", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rep = json.loads(a.read_text())
    assert set(rep) == {"meta", "checks", "tables"}
    assert all(c["status"] in ("pass", "info") for c in rep["checks"])
    capsys.readouterr()


def test_fuchsian_command(capsys):
    code, out, _ = _run(capsys, "fuchsian", "--basis", "weight12", "--x", "0", "--y", "1.1")
    assert code == 0
    row = json.loads(out)["rows"][0]
    assert row["ratio"] == pytest.approx(-1 / math.pi, rel=1e-10)
    code, out, _ = _run(capsys, "fuchsian", "--basis", "weight24", "--n-samples", "10", "--seed", "1")
    summ = json.loads(out)["ratio_summary"]
    assert code == 0 and summ["n"] == 10 and summ["min_abs"] > 0
    code, _, _ = _run(capsys, "fuchsian", "--basis", "weight12", "--format", "csv")
    assert code == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.build_parser().parse_args(["--version"])
    assert exc.value.code == 0
    assert "0.1.0" in capsys.readouterr().out


def test_toml_config(capsys, tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text('p = 60\nformat = "csv"\n')
    code, out, _ = _run(capsys, "quotient", "--config", str(cfg), "--radius", "0.5")
    assert code == 0 and out.startswith("p,")
    assert next(csv.DictReader(io.StringIO(out)))["p"] == "60"
    cfg.write_text("p = = 3\n")
    code, _, _ = _run(capsys, "quotient", "--config", str(cfg), "--radius", "0.5")
    assert code == 2
