import csv
import json
import os
import subprocess
import sys

import pytest

from gapspec.cli import DEMO_CONFIG, SPECTRUM_HEADER, RunConfig, main


def write_config(path, **overrides):
    cfg = json.loads(json.dumps(DEMO_CONFIG))
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return str(path)


def error_json(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    cfg = write_config(out / "config.json")
    assert main(["run", "--config", cfg, "--out", str(out)]) == 0
    return out


def test_run_writes_artifacts(run_dir):
    for name in ("report.json", "b.json", "spectrum.csv", "spectrum.svg"):
        assert (run_dir / name).is_file()
    with open(run_dir / "spectrum.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == SPECTRUM_HEADER and len(rows) == 257
    doc = json.loads((run_dir / "report.json").read_text())
    assert doc["config"]["group"] == [256]
    assert doc["report"]["spectrum_ok"]
    assert (run_dir / "spectrum.svg").read_text().lstrip().startswith("<?xml")


def test_run_is_deterministic(run_dir, tmp_path):
    cfg = write_config(tmp_path / "config.json")
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == 0
    for name in ("report.json", "b.json", "spectrum.csv", "spectrum.svg"):
        assert (tmp_path / name).read_bytes() == (run_dir / name).read_bytes()


def test_seed_flag_overrides_config(run_dir, tmp_path):
    cfg = write_config(tmp_path / "config.json")
    assert main(["run", "--config", cfg, "--out", str(tmp_path), "--seed", "7"]) == 0
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["config"]["seed"] == 7
    assert (tmp_path / "b.json").read_text() != (run_dir / "b.json").read_text()


def test_verify_round_trip(run_dir, capsys):
    assert main(["verify", "--out", str(run_dir)]) == 0


def test_verify_detects_flipped_index(run_dir, tmp_path, capsys):
    for name in ("report.json", "b.json", "spectrum.csv"):
        (tmp_path / name).write_bytes((run_dir / name).read_bytes())
    b = json.loads((tmp_path / "b.json").read_text())
    b = b[1:] if b else [0]
    (tmp_path / "b.json").write_text(json.dumps(b))
    assert main(["verify", "--out", str(tmp_path)]) == 4
    assert "sym_diff_weighted" in capsys.readouterr().out


def test_verify_missing_spectrum(run_dir, tmp_path, capsys):
    for name in ("report.json", "b.json"):
        (tmp_path / name).write_bytes((run_dir / name).read_bytes())
    assert main(["verify", "--out", str(tmp_path)]) == 1
    assert error_json(capsys)["error"] == "ConfigError"


def test_empty_set_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", a={"kind": "explicit", "indices": []})
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == 3
    assert error_json(capsys)["error"] == "EmptySet"


def test_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert error_json(capsys)["exit_code"] == 1


def test_unknown_key_is_config_error(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", colour="blue")
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == 1


def test_not_converged_exit_code(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", schedules={"epsilon": 0.5, "n_max": 0, "g_tol": 1e-9},
                       pair={"kind": "gapped", "start": 20, "width": 30, "gap": 10, "count": 3,
                             "family": {"kind": "box", "cap": 0, "radius": 4}},
                       a={"kind": "interval", "start": 0, "length": 100})
    assert main(["run", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert error_json(capsys)["error"] == "NotConverged"


def test_config_round_trip():
    cfg = RunConfig.from_dict(DEMO_CONFIG)
    again = RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


SWEEP = {
    "group": [512],
    "a": {"kind": "interval", "start": 0, "length": 40},
    "pair": {"kind": "gapped", "start": 40, "width": 60, "gap": 20, "count": 3,
             "family": {"kind": "box", "cap": 2, "radius": 16}},
    "schedules": {"epsilon": 0.2, "n_max": 12},
}


def test_sweep_four_points(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(dict(SWEEP, eps_list=[0.2, 0.1, 0.05, 0.025])))
    assert main(["sweep", "--config", str(path), "--out", str(tmp_path), "--threads", "2"]) == 0
    with open(tmp_path / "sweep.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    assert list(rows[0])[:6] == ["epsilon", "u_norm", "log_term", "ratio", "iterations", "runtime_ms"]
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert fit["verdict"] == "pass"


def test_sweep_single_point(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps(dict(SWEEP, eps_list=[0.1])))
    assert main(["sweep", "--config", str(path), "--out", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "fit.json").read_text())["verdict"] == "insufficient points"


def test_sweep_all_rows_failing(tmp_path):
    path = tmp_path / "s.json"
    cfg = dict(SWEEP, eps_list=[0.4, 0.3], schedules={"epsilon": 0.4, "n_max": 0, "g_tol": 1e-12},
               a={"kind": "random", "size": 200})
    path.write_text(json.dumps(cfg))
    assert main(["sweep", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_demo_and_module_entry_point(tmp_path):
    env = dict(os.environ, SCF_LOG="ERROR")
    proc = subprocess.run([sys.executable, "-m", "gapspec", "demo", "--out", str(tmp_path)],
                          capture_output=True, text=True, env=env)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "config.json").is_file() and (tmp_path / "spectrum.csv").is_file()
