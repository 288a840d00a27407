import json

import pytest

from cocyclelab.cli import build_parser, load_config, main


def test_run_writes_report_and_tables(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(["metric", "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["ok"] is True
    assert (out / "metric.csv").exists()
    assert (out / "stages.csv").exists()
    assert "metric: ok" in capsys.readouterr().out


def test_config_file_and_overrides(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"c": 0.1}))
    args = build_parser().parse_args(
        ["trivialize", "--config", str(cfg_path), "--tol", "0.5",
         "--seed", "9"])
    cfg = load_config(args)
    assert cfg["pipeline"] == "trivialize"
    assert cfg["c"] == 0.1
    assert cfg["tol"] == 0.5
    assert cfg["seed"] == 9


def test_numeric_failure_exits_one(tmp_path):
    code = main(["trivialize", "--tol", "1e-30"])
    assert code == 1


def test_malformed_config_exits_two(tmp_path, capsys):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps({"step": 0.3}))  # does not divide k_max
    code = main(["metric", "--config", str(cfg_path)])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_invalid_json_exits_two(tmp_path):
    cfg_path = tmp_path / "broken.json"
    cfg_path.write_text("{not json")
    assert main(["metric", "--config", str(cfg_path)]) == 2
    assert main(["metric", "--config", str(tmp_path / "missing.json")]) == 2


def test_pipeline_mismatch_exits_two(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"pipeline": "metric"}))
    assert main(["trivialize", "--config", str(cfg_path)]) == 2
