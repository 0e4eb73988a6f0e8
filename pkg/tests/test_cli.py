import json

import pytest

from fpif.cli import main
from fpif.config import ConfigError, config_hash, dump_config, parse_config


def _run_dir(out, cfg, command):
    return out / config_hash(parse_config(cfg)) / command


def test_minimal_config_fills_defaults():
    cfg = parse_config({"drift": {"kind": "Quadratic"}})
    assert cfg.grid.dx == 0.01
    assert cfg.trunc.R == 10.0
    assert cfg.trunc.alpha_R == pytest.approx(1000.0)
    assert cfg.initial.params == {"center": -3.0, "sigma": 0.3}


def test_round_trip():
    cfg = parse_config({"drift": {"kind": "Exponential"}, "time": {"t_end": 3.0}})
    again = parse_config(dump_config(cfg))
    assert again.to_dict() == cfg.to_dict()
    assert config_hash(again) == config_hash(cfg)


@pytest.mark.parametrize("data, message", [
    ({"trunc": {"R": 5.0}, "grid": {"x_max": 4.0}}, "R < x_max"),
    ({"grid": {"x_min": -0.5}}, "x_min < x0"),
    ({"grid": {"dx": -1.0}}, "dx > 0"),
    ({"grid": {"spacing": 1.0}}, "unknown keys"),
    ({"colour": 1}, "unknown top-level"),
])
def test_invalid_configs_named(data, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(data)


def test_bad_json_reports_position():
    with pytest.raises(ConfigError, match="line 2"):
        parse_config('{"grid":\n  {"dx": }}')


def test_invalid_config_exit_status(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"trunc": {"R": 5.0}, "grid": {"x_max": 4.0}}))
    assert main(["steady-state", "--config", str(path), "--out", str(tmp_path / "runs")]) == 2
    path.write_text(json.dumps({"grid": {"x_min": 0.5}}))
    assert main(["steady-state", "--config", str(path), "--out", str(tmp_path / "runs")]) != 0


def test_validate_drift_check_passes(tmp_path):
    out = tmp_path / "runs"
    assert main(["validate-drift", "--check", "--out", str(out)]) == 0
    run = _run_dir(out, {}, "validate-drift")
    checks = json.loads((run / "checks.json").read_text())
    assert checks["1"]["passed"] and checks["12"]["passed"]
    manifest = json.loads((run / "manifest.json").read_text())
    assert manifest["config_hash"] == run.parent.name
    assert {"numpy", "scipy", "numba"} <= set(manifest["module_versions"])


def test_evolve_from_steady_state_passes(tmp_path):
    cfg = {"initial": {"kind": "steady"}, "time": {"t_end": 0.5, "snapshot_every": 0.1}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "runs"
    assert main(["evolve", "--check", "--config", str(path), "--out", str(out)]) == 0
    run = _run_dir(out, cfg, "evolve")
    checks = json.loads((run / "checks.json").read_text())
    assert checks["4"]["passed"] and checks["5"]["passed"]
    assert (run / "trace.csv").exists()


def test_csv_outputs_are_byte_identical(tmp_path):
    cfg = {"grid": {"dx": 0.05}, "time": {"t_end": 0.2, "snapshot_every": 0.1}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        assert main(["evolve", "--config", str(path), "--out", str(out)]) == 0
    runs = [_run_dir(out, cfg, "evolve") for out in outs]
    names = sorted(p.relative_to(runs[0]) for p in runs[0].rglob("*.csv"))
    assert names
    for name in names:
        assert (runs[0] / name).read_bytes() == (runs[1] / name).read_bytes()


def test_report_lists_missing_criteria(tmp_path):
    out = tmp_path / "runs"
    main(["validate-drift", "--out", str(out)])
    assert main(["report", "--check", "--out", str(out)]) == 1
    rows = json.loads((_run_dir(out, {}, "report") / "report.json").read_text())
    status = {r["criterion"]: r["status"] for r in rows}
    assert status[1] == "pass" and status[11] == "missing"
