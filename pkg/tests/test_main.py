# tests/test_main.py
import json

import pytest

from core.exceptions import SolverError
from main import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main


@pytest.fixture
def write_config(tmp_path):
    def _write(text, name="run.cfg"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return _write


def test_comparison_run_writes_outputs(tmp_path, write_config):
    cfg = write_config("scenario = comparison_sweep\nsweep_max = 0.5\n")
    out = tmp_path / "out"
    assert main(["run", cfg, "--out", str(out), "--svg"]) == EXIT_OK
    for name in ("comparison_sweep_sweep.csv", "comparison_sweep.svg", "comparison_sweep_metadata.json"):
        assert (out / name).is_file()
    meta = json.loads((out / "comparison_sweep_metadata.json").read_text(encoding="utf-8"))
    assert set(meta["artifacts"]) == {"sweep", "svg", "metadata"}


def test_time_dependent_run_writes_series(tmp_path, write_config):
    cfg = write_config("scenario = dam_break\n")
    out = tmp_path / "dam"
    assert main(["run", cfg, "--out", str(out), "--override", "J=40", "--override", "max_steps=5"]) == EXIT_OK
    assert (out / "dam_break_series.csv").is_file()
    assert (out / "dam_break_final.csv").is_file()


def test_bad_courant_number_is_config_error(tmp_path, write_config, capsys):
    cfg = write_config("scenario = lake_at_rest\nnu = 0.9\n")
    assert main(["run", cfg, "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "Courant number must be ≤ 0.5" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert main(["run", str(tmp_path / "nope.cfg")]) == EXIT_CONFIG


def test_usage_errors():
    assert main([]) == EXIT_CONFIG
    assert main(["frobnicate"]) == EXIT_CONFIG


def test_solver_failure_is_runtime_error(tmp_path, write_config, monkeypatch):
    def explode(config):
        raise SolverError("negative mass", cell=3, time=0.5)

    monkeypatch.setattr("routers.run.run_scenario", explode)
    cfg = write_config("scenario = lake_at_rest\n")
    assert main(["run", cfg, "--out", str(tmp_path)]) == EXIT_RUNTIME
