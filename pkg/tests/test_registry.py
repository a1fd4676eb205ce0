"""Tests for qbl/experiments/registry.py — experiment registration and lookup."""
import pytest

from qbl.experiments import registry
from qbl.experiments.registry import (
    ExperimentDef,
    ExperimentParam,
    ExperimentResult,
    Table,
    all_experiments,
    experiment_descriptions,
    get_experiment,
    register_experiment,
)


class TestExperimentResult:
    def test_data_result(self):
        r = ExperimentResult(type="data", summary={"gap": 0.3})
        assert r.type == "data"
        assert r.tables == {}
        assert r.summary["gap"] == 0.3

    def test_error_result(self):
        r = ExperimentResult(type="error", text="failed")
        assert r.type == "error"
        assert r.plots == {}


class TestExperimentParam:
    def test_defaults(self):
        p = ExperimentParam(name="kappa")
        assert p.type == "float"
        assert p.required is False
        assert p.default is None


class TestTable:
    def test_add_and_column(self):
        t = Table(["bc", "re"])
        t.add("OBC", -0.3)
        t.add("PBC", 0.2)
        assert t.column("re") == [-0.3, 0.2]

    def test_row_length_checked(self):
        t = Table(["a", "b"])
        with pytest.raises(ValueError):
            t.add(1.0)


class TestExperimentRegistry:
    def test_builtin_experiments_registered(self):
        """Every experiment kind is available after importing the package."""
        experiments = all_experiments()
        expected = [
            "spectrum", "winding", "pseudo", "phase-diagram",
            "evolve", "mixing", "amplify",
            "modes", "quasi", "disorder",
            "power", "scan", "oracle-check",
        ]
        for name in expected:
            assert name in experiments, f"Experiment '{name}' not registered"
        assert len(experiments) == len(expected)

    def test_get_experiment_exists(self):
        exp = get_experiment("spectrum")
        assert isinstance(exp, ExperimentDef)
        assert exp.name == "spectrum"
        assert callable(exp.handler)
        assert exp.category == "spectral"

    def test_get_experiment_not_exists(self):
        assert get_experiment("nonexistent") is None

    def test_defaults_skip_required(self):
        exp = ExperimentDef(
            name="x",
            description="",
            params=[ExperimentParam("a", required=True), ExperimentParam("b", default=2)],
            handler=lambda spec, ctx=None, **kw: None,
        )
        assert exp.defaults() == {"b": 2}

    def test_descriptions(self):
        desc = experiment_descriptions()
        assert "- spectrum [spectral]:" in desc
        assert "oracle-check" in desc
        assert "theta(default 1.0)" in desc

    def test_register_custom(self, monkeypatch):
        monkeypatch.setattr(registry, "_experiments", dict(registry._experiments))

        @register_experiment("custom.echo", params=[ExperimentParam("value", required=True)])
        def echo(spec, ctx=None, value=None):
            """Echo a value."""
            return ExperimentResult(type="data", summary={"value": value})

        exp = get_experiment("custom.echo")
        assert exp.description == "Echo a value."
        assert exp.handler(None, value=3).summary == {"value": 3}
