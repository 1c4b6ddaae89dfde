"""Command-line interface: subcommands, outputs, exit codes."""

import json

import pytest

from reopt.cli import main
from reopt.experiments import read_sweep_csv


@pytest.fixture
def config_file(tmp_path):
    def make(doc, name="cfg.json"):
        path = tmp_path / name
        path.write_text(json.dumps(doc))
        return str(path)

    return make


BASE_DOC = {
    "project": {"rho": 0.5},
    "option": {"gamma": 1.0},
    "grid": {"dt": 0.05},
}


def test_price_prints_value_and_threshold(config_file, capsys):
    assert main(["price", "--config", config_file(BASE_DOC)]) == 0
    out = capsys.readouterr().out
    assert "option_value_v0" in out
    assert "threshold_spot_t0" in out


def test_price_dt_override(config_file, capsys):
    code = main(["price", "--config", config_file(BASE_DOC), "--dt", "0.1"])
    assert code == 0
    assert "N=100" in capsys.readouterr().out


def test_validate_reports_moments(config_file, capsys):
    assert main(["validate", "--config", config_file(BASE_DOC)]) == 0
    out = capsys.readouterr().out
    assert "E[S1/S0]" in out
    assert "Cov" in out


def test_threshold_writes_curve(config_file, tmp_path, capsys):
    out = tmp_path / "curve.csv"
    code = main(["threshold", "--config", config_file(BASE_DOC), "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0].startswith("# config_sha256=")
    assert lines[1].startswith("n,t,")
    assert len(lines) == 2 + 200 + 1


def test_sweep_from_config(config_file, tmp_path):
    doc = dict(BASE_DOC, sweep={"name": "gamma", "values": [0.5, 1.0]})
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", config_file(doc), "--out", str(out)]) == 0
    _, rows = read_sweep_csv(out)
    assert len(rows) == 2
    assert [r["swept_value"] for r in rows] == ["0.5", "1"]


def test_sweep_preset(tmp_path):
    out = tmp_path / "fig2r.csv"
    code = main(["sweep", "--preset", "fig2-right", "--dt", "0.05", "--out", str(out)])
    assert code == 0
    _, rows = read_sweep_csv(out)
    assert [float(r["swept_value"]) for r in rows] == [0.02, 0.04, 0.06, 0.08]
    thresholds = [float(r["threshold_spot_t0"]) for r in rows]
    assert all(a > b for a, b in zip(thresholds, thresholds[1:]))


def test_sweep_preset_fig4_emits_value_curves(tmp_path):
    # rho = 0.99 needs a step finer than about 1/317 to stay feasible
    out = tmp_path / "fig4.csv"
    code = main(["sweep", "--preset", "fig4", "--dt", "0.003", "--out", str(out)])
    assert code == 0
    assert (tmp_path / "fig4_value_rho=0.csv").exists()
    assert (tmp_path / "fig4_value_rho=0.99.csv").exists()


def test_sweep_requires_preset_or_sweep_section(config_file):
    assert main(["sweep", "--config", config_file(BASE_DOC)]) == 2


def test_missing_required_fields_is_config_error(config_file, capsys):
    code = main(["price", "--config", config_file({"project": {}})])
    assert code == 2
    assert "project.rho" in capsys.readouterr().err


def test_malformed_json_is_config_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{broken")
    assert main(["price", "--config", str(path)]) == 2


def test_domain_violation_is_config_error(config_file, capsys):
    doc = {"project": {"rho": 1.5}, "option": {"gamma": 1.0}}
    assert main(["price", "--config", config_file(doc)]) == 2
    assert "rho" in capsys.readouterr().err


def test_infeasible_calibration_exit_code(config_file, capsys):
    doc = {"project": {"rho": 0.99}, "option": {"gamma": 1.0}, "grid": {"dt": 0.01}}
    assert main(["price", "--config", config_file(doc)]) == 3
    assert "infeasible" in capsys.readouterr().err


def test_missing_config_file_is_io_error(capsys):
    assert main(["price", "--config", "/nonexistent/cfg.json"]) == 4
    assert "cannot read" in capsys.readouterr().err


def test_unwritable_output_is_io_error(config_file, capsys):
    code = main([
        "threshold",
        "--config", config_file(BASE_DOC),
        "--out", "/nonexistent-dir/curve.csv",
    ])
    assert code == 4
    assert "cannot write" in capsys.readouterr().err


def test_unknown_preset_rejected_by_argparse(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["sweep", "--preset", "fig7"])
    assert exc.value.code == 2
