"""Tests for qbl/experiments/runner.py — dispatch, validation and artifact output."""
import json

import numpy as np
import pytest
from pydantic import ValidationError

from qbl.errors import ConfigError, NumericalError
from qbl.experiments.registry import Table
from qbl.experiments.runner import (
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    EXIT_OK,
    ExperimentConfig,
    RunContext,
    config_hash,
    execute_experiment,
    format_value,
    load_config,
    run,
    write_failure_manifest,
    write_table,
)
from qbl.models import ModelSpec


def _config(*experiments, **model):
    return ExperimentConfig.model_validate({
        "model": {"J": 2.0, "Delta": 0.5, "kappa": 0.3, "N": 6, **model},
        "experiments": list(experiments),
        "seed": 11,
    })


class TestExecuteExperiment:
    def test_unknown_experiment(self):
        with pytest.raises(ConfigError, match="Unknown experiment"):
            execute_experiment("nonexistent", ModelSpec(N=4), {}, RunContext())

    def test_unknown_param(self):
        with pytest.raises(ConfigError, match="unknown params"):
            execute_experiment("spectrum", ModelSpec(N=4), {"colour": "red"}, RunContext())

    def test_defaults_filled(self):
        result = execute_experiment("spectrum", ModelSpec(N=4), {"bands": False}, RunContext())
        assert result.type == "data"
        assert set(result.tables) == {"rapidities"}
        assert result.summary["classification"] == "metastable"

    def test_library_errors_propagate(self):
        with pytest.raises(NumericalError):
            execute_experiment("winding", ModelSpec(N=6), {"lam0_re": -0.3 + 0.5}, RunContext())


class TestFormatting:
    def test_float_digits(self):
        assert format_value(0.1) == "0.10000000000000001"
        assert format_value(np.float64(1.5)) == "1.5"
        assert format_value(0.1, digits=3) == "0.1"

    def test_other_types(self):
        assert format_value(3) == "3"
        assert format_value(np.int64(-2)) == "-2"
        assert format_value(True) == "true"
        assert format_value(None) == ""
        assert format_value("OBC") == "OBC"

    def test_complex_rejected(self):
        with pytest.raises(TypeError):
            format_value(1 + 2j)

    def test_csv_uses_lf(self, tmp_path):
        t = Table(["bc", "re"])
        t.add("OBC", -0.25)
        path = write_table(tmp_path / "t.csv", t)
        raw = path.read_bytes()
        assert b"\r\n" not in raw
        assert raw == b"bc,re\nOBC,-0.25\n"


class TestConfig:
    def test_load(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"model": {"N": 8}, "experiments": [{"kind": "spectrum"}]}))
        config = load_config(str(path))
        assert config.model.N == 8
        assert config.experiments[0].kind == "spectrum"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(str(tmp_path / "absent.json"))

    def test_bad_json(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_invalid_model(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"model": {"J": 0.1, "Delta": 0.5}}))
        with pytest.raises(ValidationError):
            load_config(str(path))

    def test_hash_is_stable(self):
        assert config_hash(_config()) == config_hash(_config())
        assert config_hash(_config()) != config_hash(_config(kappa=0.7))


class TestRun:
    def test_empty_config_writes_manifest_only(self, tmp_path):
        outcome = run(_config(), out_dir=str(tmp_path))
        assert outcome.exit_code == EXIT_OK
        assert [p.name for p in tmp_path.iterdir()] == ["manifest.json"]
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["experiments"] == []
        assert manifest["seed"] == 11
        assert "numpy" in manifest["versions"]

    def test_artifacts_and_manifest(self, tmp_path):
        config = _config({"kind": "spectrum", "name": "spec"}, {"kind": "winding"})
        outcome = run(config, out_dir=str(tmp_path), threads=2)
        assert outcome.exit_code == EXIT_OK
        names = {p.name for p in tmp_path.iterdir()}
        assert {"spec_rapidities.csv", "spec_bands.csv", "spec_summary.json",
                "01_winding_windings.csv", "manifest.json"} <= names
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["threads"] == 2
        assert manifest["config_hash"] == config_hash(config)
        assert [e["status"] for e in manifest["experiments"]] == ["ok", "ok"]

    def test_model_override_per_entry(self, tmp_path):
        config = _config({"kind": "spectrum", "name": "stable", "model": {"kappa": 0.7},
                          "params": {"bands": False}})
        outcome = run(config, out_dir=str(tmp_path))
        assert outcome.manifest["experiments"][0]["summary"]["classification"] == "unconditionally_stable"

    def test_deterministic_output(self, tmp_path):
        config = _config({"kind": "amplify", "name": "amp",
                          "params": {"n_samples": 10, "Ns": [6], "t_max": 5.0, "n_times": 51}})
        run(config, out_dir=str(tmp_path / "a"))
        run(config, out_dir=str(tmp_path / "b"))
        for name in ("amp_peaks.csv", "amp_traces.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_seed_override_changes_samples(self, tmp_path):
        config = _config({"kind": "amplify", "name": "amp",
                          "params": {"n_samples": 10, "Ns": [6], "t_max": 5.0, "n_times": 51}})
        run(config, out_dir=str(tmp_path / "a"))
        outcome = run(config, out_dir=str(tmp_path / "b"), seed=12)
        assert outcome.manifest["seed"] == 12
        assert (tmp_path / "a" / "amp_traces.csv").read_bytes() != (tmp_path / "b" / "amp_traces.csv").read_bytes()

    def test_config_error_exit_code(self, tmp_path):
        outcome = run(_config({"kind": "nonexistent"}), out_dir=str(tmp_path))
        assert outcome.exit_code == EXIT_CONFIG
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["exit_code"] == EXIT_CONFIG
        assert manifest["experiments"][0]["status"] == "error"

    def test_numerical_error_stops_run(self, tmp_path):
        config = _config({"kind": "evolve", "params": {"initial_site": 99}}, {"kind": "spectrum"})
        outcome = run(config, out_dir=str(tmp_path))
        assert outcome.exit_code == EXIT_NUMERICAL
        assert len(outcome.manifest["experiments"]) == 1
        assert outcome.manifest["module"] == "qbl.experiments.builtin.transients"

    def test_only_kind_without_entry(self, tmp_path):
        outcome = run(_config(), out_dir=str(tmp_path), only_kind="spectrum")
        assert outcome.exit_code == EXIT_OK
        assert (tmp_path / "00_spectrum_rapidities.csv").exists()

    def test_svg_skipped_without_matplotlib(self, tmp_path, mocker):
        mocker.patch("qbl.experiments.runner.write_svg", side_effect=ImportError("matplotlib"))
        outcome = run(_config({"kind": "spectrum", "params": {"bands": False}}), out_dir=str(tmp_path), svg=True)
        assert outcome.exit_code == EXIT_OK
        assert not list(tmp_path.glob("*.svg"))

    def test_failure_manifest(self, tmp_path):
        path = write_failure_manifest(str(tmp_path), ConfigError("bad", module="qbl.cli"), EXIT_CONFIG)
        manifest = json.loads(path.read_text())
        assert manifest["exit_code"] == EXIT_CONFIG
        assert manifest["module"] == "qbl.cli"
        assert manifest["experiments"] == []
