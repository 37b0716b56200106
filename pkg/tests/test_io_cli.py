"""Run artifacts and command-line interface: formats, exit codes, determinism."""
import json
import math

import numpy as np
import pytest

from opkin.cli import main
from opkin.params import ParamError
from opkin.runio import (
    SCHEMA_VERSION,
    coerce_config,
    format_value,
    parse_config_text,
    read_csv,
    resolve_out_dir,
    write_summary,
    write_table,
)


# ---- low-level formats ---------------------------------------------------------
def test_format_value_conventions():
    assert format_value(True) == "true" and format_value(False) == "false"
    assert format_value(0.1) == repr(0.1)
    assert format_value(7) == "7"
    assert format_value((0.25, 1.5)) == "0.25,1.5"


def test_parse_config_text():
    cfg = parse_config_text("a = 1\n# comment\n\nb=two words  \n")
    assert cfg == {"a": "1", "b": "two words"}
    with pytest.raises(ParamError):
        parse_config_text("a=1\na=2\n")  # duplicate
    with pytest.raises(ParamError):
        parse_config_text("novalue\n")   # missing '='
    with pytest.raises(ParamError):
        parse_config_text("=1\n")        # empty key


def test_coerce_config_types_and_unknown_keys():
    schema = {"n": int, "x": float, "flag": bool, "name": str, "sweep": tuple}
    out = coerce_config(
        {"n": "5", "x": "2.5", "flag": "true", "name": "abc", "sweep": "0.1,0.2"},
        schema)
    assert out == {"n": 5, "x": 2.5, "flag": True, "name": "abc", "sweep": (0.1, 0.2)}
    with pytest.raises(ParamError) as exc:
        coerce_config({"bogus": "1"}, schema)
    assert "bogus" in str(exc.value) and "n" in str(exc.value)
    with pytest.raises(ParamError):
        coerce_config({"n": "1.5"}, schema)
    with pytest.raises(ParamError):
        coerce_config({"flag": "maybe"}, schema)


def test_table_roundtrip_full_precision(tmp_path):
    awkward = [0.1 + 0.2, 1e-17, -12345.678901234567, math.pi]
    records = [(i, v) for i, v in enumerate(awkward)]
    path = tmp_path / "t.csv"
    write_table(path, "demo-table", ["idx", "value"], records, {"seed": 7})
    schema, config, names, data = read_csv(path)
    assert schema == "demo-table"
    assert config == {"seed": "7"}
    assert names == ["idx", "value"]
    back = [float(v) for v in data[:, 1]]
    assert back == awkward  # repr round-trip is exact
    first = path.read_text().splitlines()[0]
    assert first == f"# schema=demo-table {SCHEMA_VERSION}"


def test_read_csv_rejects_wrong_preamble(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,mass\n0.0,1.0\n")
    with pytest.raises(ParamError):
        read_csv(p)
    p2 = tmp_path / "badver.csv"
    p2.write_text("# schema=demo v999\nt\n0.0\n")
    with pytest.raises(ParamError):
        read_csv(p2)


def test_write_summary_sanitizes_non_finite(tmp_path):
    path = write_summary(tmp_path / "s.json", {"ok": 1.5, "bad": math.inf,
                                               "worse": math.nan})
    data = json.loads(path.read_text())
    assert data["ok"] == 1.5
    assert data["bad"] == "inf"
    assert data["worse"] == "nan"


def test_resolve_out_dir_env_override(tmp_path, monkeypatch):
    monkeypatch.delenv("OPK_OUT_DIR", raising=False)
    d = resolve_out_dir(str(tmp_path / "a" / "b"))
    assert d.is_dir()
    monkeypatch.setenv("OPK_OUT_DIR", str(tmp_path / "env"))
    d2 = resolve_out_dir(str(tmp_path / "ignored"))
    assert d2 == tmp_path / "env" and d2.is_dir()
    assert not (tmp_path / "ignored").exists()


# ---- CLI: analytic ---------------------------------------------------------------
def test_cli_analytic_defaults(capsys):
    assert main(["analytic"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["sigma2"] == pytest.approx(0.5, rel=1e-12)
    assert data["kappa_crit"] == pytest.approx(1.0)
    assert data["rho_star"] == pytest.approx(2.1213203435596424, rel=1e-12)
    assert data["c_diff"] == pytest.approx(0.5 * 0.5 * 2 ** -1.5, rel=1e-10)
    assert data["mode"] == "symmetric"


def test_cli_analytic_supercritical_reports_nulls(capsys):
    assert main(["analytic", "--kappa", "1.5"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["sigma2"] is None
    assert data["kappa_crit"] == pytest.approx(1.0)


def test_cli_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("kappa = 0.7\nzeta = 2.0\n# comment\n")
    assert main(["analytic", "--config", str(cfg), "--kappa", "0.3"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["kappa"] == 0.3   # flag beats file
    assert data["zeta"] == 2.0    # file beats default


def test_cli_rejects_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("not_a_key = 1\n")
    assert main(["analytic", "--config", str(cfg)]) == 2
    assert "not_a_key" in capsys.readouterr().err


def test_cli_rejects_bad_parameter(capsys):
    assert main(["analytic", "--gamma", "0.7"]) == 2
    assert "gamma" in capsys.readouterr().err


def test_cli_missing_config_file(capsys):
    assert main(["analytic", "--config", "/nonexistent/x.cfg"]) == 2


# ---- CLI: run subcommands ---------------------------------------------------------
def _run(args, out_dir):
    return main(args + ["--out-dir", str(out_dir)])


def test_cli_kinetic_run_writes_artifacts(tmp_path):
    out = tmp_path / "kin"
    rc = _run(["kinetic-run", "--m", "128", "--t-end", "2.0"], out)
    assert rc == 0
    schema, config, names, data = read_csv(out / "kinetic_trace.csv")
    assert schema == "kinetic-trace"
    assert names == ["t", "mass", "mean", "variance", "residual"]
    assert float(data[-1, 1]) == pytest.approx(1.0, abs=1e-12)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["command"] == "kinetic-run"
    assert summary["result"]["saturated"] is False
    assert summary["analytic"]["sigma2"] == pytest.approx(0.5)


def test_cli_kinetic_run_reruns_byte_identical(tmp_path):
    outs = [tmp_path / "r1", tmp_path / "r2"]
    for out in outs:
        assert _run(["kinetic-run", "--m", "128", "--t-end", "1.0"], out) == 0
    for name in ("kinetic_trace.csv", "summary.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_cli_kinetic_run_supercritical_exits_3(tmp_path, capsys):
    rc = _run(["kinetic-run", "--m", "128", "--kappa", "1.3", "--t-end", "2000",
               "--trace-dt", "10"], tmp_path / "sup")
    assert rc == 3
    assert "supercritical" in capsys.readouterr().err
    # artifacts are still written for post-mortem inspection
    summary = json.loads((tmp_path / "sup" / "summary.json").read_text())
    assert summary["result"]["saturated"] is True


def test_cli_particle_run_homogeneous(tmp_path):
    out = tmp_path / "part"
    rc = _run(["particle-run", "--n", "64", "--replicas", "2", "--dt", "0.1",
               "--t-end", "1.0"], out)
    assert rc == 0
    schema, config, names, data = read_csv(out / "particle_trace.csv")
    assert schema == "particle-trace"
    assert names == ["t", "mean", "variance"]
    assert config["scheme"] == "meanfield-sde"
    summary = json.loads((out / "summary.json").read_text())
    assert summary["result"]["rejection_cap_warnings"] == 0


def test_cli_particle_run_spatial_bins(tmp_path):
    out = tmp_path / "sp"
    rc = _run(["particle-run", "--spatial", "true", "--n", "512", "--bins", "8",
               "--t-end", "0.2", "--dt", "0.05", "--epsilon", "0.25"], out)
    assert rc == 0
    schema, config, names, data = read_csv(out / "particle_trace.csv")
    assert names[:3] == ["t", "mean", "variance"]
    assert "rho_00" in names and "phi_07" in names
    assert len(names) == 3 + 16


def test_cli_particle_run_rejection_cap_exits_3(tmp_path, capsys):
    # horizon and trace interval must exceed dt, or the stepper clamps dt to
    # the next trace mark and the cap is never reached
    rc = _run(["particle-run", "--scheme", "collision-mc", "--n", "64",
               "--dt", "10.0", "--t-end", "1000.0", "--trace-dt", "1000.0"],
              tmp_path / "cap")
    assert rc == 3
    assert "retry with dt" in capsys.readouterr().err


def test_cli_macro_run_consensus(tmp_path):
    out = tmp_path / "mac"
    rc = _run(["macro-run", "--j", "64", "--t-end", "2.0"], out)
    assert rc == 0
    schema, config, names, data = read_csv(out / "macro_trace.csv")
    assert schema == "macro-trace"
    assert names == ["t", "conserved", "entropy", "dissipation_rhs", "amplitude"]
    summary = json.loads((out / "summary.json").read_text())
    assert summary["result"]["entropy_monotone"] is True
    # uniform density, k = 1: t* = ln(100) / (c_diff * 4 pi^2)
    c = summary["config"]["c_diff"]
    t_star = math.log(100.0) / (c * 4.0 * math.pi ** 2)
    assert summary["result"]["consensus_time"] == pytest.approx(t_star, rel=0.02)


def test_cli_macro_run_bad_grid_exits_2(tmp_path, capsys):
    assert _run(["macro-run", "--j", "4"], tmp_path / "bad") == 2


def test_cli_out_dir_env_wins(tmp_path, monkeypatch):
    env_dir = tmp_path / "from_env"
    monkeypatch.setenv("OPK_OUT_DIR", str(env_dir))
    rc = main(["macro-run", "--j", "64", "--t-end", "0.01",
               "--out-dir", str(tmp_path / "flag_dir")])
    assert rc == 0
    assert (env_dir / "macro_trace.csv").exists()
    assert not (tmp_path / "flag_dir").exists()


def test_cli_experiment_entropy_audit(tmp_path):
    outs = [tmp_path / "e1", tmp_path / "e2"]
    for out in outs:
        rc = _run(["experiment", "entropy-audit", "--j-cells", "64"], out)
        assert rc == 0
    schema, config, names, data = read_csv(outs[0] / "entropy_audit.csv")
    assert schema == "entropy-audit"
    assert config["experiment"] == "entropy-audit"
    summary = json.loads((outs[0] / "summary.json").read_text())
    assert summary["command"] == "experiment entropy-audit"
    assert all(v < 1e-4 for v in summary["result"]["levels"].values())
    for name in ("entropy_audit.csv", "summary.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_cli_experiment_unknown_kind_exits_2(tmp_path, capsys):
    assert _run(["experiment", "bogus-kind"], tmp_path / "x") == 2
