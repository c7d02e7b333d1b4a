import copy
import csv
import io
import json

import pytest

from sovxxz import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_config(tmp_path, name="cfg.json", **overrides):
    params = copy.deepcopy(cli.DEFAULT_PARAMS)
    extra = overrides.pop("extra", {})
    params.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps({"params": params, **extra}))
    return str(path)


@pytest.mark.parametrize("command", ["verify", "spectrum", "scalar", "matelem"])
def test_defaults_exit_zero(command, capsys):
    code, out, _ = run(capsys, command)
    assert code == cli.EXIT_OK
    doc = json.loads(out)
    assert doc["status"] == "ok"
    assert doc["tolerances"] == {"rel": cli.DEFAULT_TOL_REL, "abs": cli.DEFAULT_TOL_ABS}
    assert all(c["pass"] for c in doc["checks"].values())


def test_coinciding_inhomogeneities_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path, xi=[[0.21, 0.05], [0.21, 0.05], [0.47, -0.09]])
    code, out, err = run(capsys, "spectrum", "--config", cfg)
    assert code == cli.EXIT_VALIDATION
    assert "a=1, b=2, r=0" in err
    assert out == ""


def test_general_side_kappa_zero_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path, kappa_minus=[0.0, 0.0])
    code, _, err = run(capsys, "spectrum", "--config", cfg)
    assert code == cli.EXIT_VALIDATION
    assert "b-(lambda) vanishes" in err


def test_site_out_of_range(capsys):
    code, _, err = run(capsys, "matelem", "--n", "9")
    assert code == cli.EXIT_VALIDATION
    assert "n=9" in err


@pytest.mark.parametrize("doc", [[1, 2], {"params": {"n_sites": 0}}, {"bogus": 1}])
def test_malformed_config(doc, tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    code, _, err = run(capsys, "verify", "--config", str(path))
    assert code == cli.EXIT_VALIDATION
    assert "config error" in err


def test_parse_complex():
    assert cli.parse_complex([1, 2], "x") == 1 + 2j
    assert cli.parse_complex(0.5, "x") == 0.5
    with pytest.raises(cli.ConfigError):
        cli.parse_complex(True, "x")
    with pytest.raises(cli.ConfigError):
        cli.parse_complex([1, 2, 3], "x")


def test_config_hash_ignores_workers():
    doc = {"params": cli.DEFAULT_PARAMS}
    a = cli.load_config(doc, workers=1)
    b = cli.load_config(doc, workers=8)
    c = cli.load_config(doc, seed=5)
    assert a.hash() == b.hash() != c.hash()


def test_sweep_csv(tmp_path, capsys):
    values = [[0.2, 0.0], [0.3, -0.1], [0.4, -0.1], [0.5, 0.1], [0.6, 0.0]]
    cfg = write_config(tmp_path, extra={"sweep": {"param": "kappa_minus", "values": values,
                                                  "command": "spectrum"}})
    out = tmp_path / "sweep.json"
    code, _, _ = run(capsys, "sweep", "--config", cfg, "--out", str(out), "--workers", "2")
    assert code == cli.EXIT_OK
    rows = list(csv.DictReader(io.StringIO((tmp_path / "sweep.csv").read_text())))
    assert len(rows) == 5
    assert [int(r["index"]) for r in rows] == list(range(5))
    assert all(r["status"] == "ok" and len(r["config_hash"]) == 16 for r in rows)
    assert len({r["config_hash"] for r in rows}) == 5
    doc = json.loads(out.read_text())
    assert doc["status"] == "ok" and len(doc["points"]) == 5


def test_sweep_reports_invalid_point(tmp_path, capsys):
    cfg = write_config(tmp_path, extra={"sweep": {"param": "kappa_minus", "values": [[0.4, -0.1], 0.0],
                                                  "command": "spectrum"}})
    code, out, _ = run(capsys, "sweep", "--config", cfg)
    assert code == cli.EXIT_VALIDATION
    doc = json.loads(out)
    assert [p["status"] for p in doc["points"]] == ["ok", "invalid"]


def test_sweep_without_section(capsys):
    code, _, err = run(capsys, "sweep")
    assert code == cli.EXIT_VALIDATION
    assert "sweep" in err


def test_single_site_spectrum(tmp_path, capsys):
    cfg = write_config(tmp_path, n_sites=1, xi=[[0.21, 0.05]])
    code, out, _ = run(capsys, "spectrum", "--config", cfg)
    assert code == cli.EXIT_OK
    assert json.loads(out)["results"]["n_eigenvalues"] == 2


def test_four_site_projector(tmp_path, capsys):
    cfg = write_config(tmp_path, n_sites=4,
                       xi=[[0.21, 0.05], [-0.33, 0.12], [0.47, -0.09], [0.12, 0.31]])
    code, out, _ = run(capsys, "spectrum", "--config", cfg)
    assert code == cli.EXIT_OK
    assert json.loads(out)["checks"]["projector_sum"]["residual"] < 1e-7


def test_tight_tolerance_gives_residual_exit(capsys):
    code, out, err = run(capsys, "verify", "--tol-rel", "1e-30", "--tol-abs", "1e-30")
    assert code == cli.EXIT_RESIDUAL
    assert json.loads(out)["status"] == "residual_failure"
    assert "residual failure" in err


def test_repeated_runs_identical(tmp_path, capsys):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    run(capsys, "matelem", "--out", str(a))
    run(capsys, "matelem", "--out", str(b), "--workers", "4")
    assert a.read_bytes() == b.read_bytes()


def test_plus_case_override(capsys):
    code, out, _ = run(capsys, "spectrum", "--case", "plus")
    assert code == cli.EXIT_OK
    assert json.loads(out)["results"]["eps"] == "+"
