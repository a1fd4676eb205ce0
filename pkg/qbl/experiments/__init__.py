"""Experiment system — registry, runner."""
from .registry import register_experiment, get_experiment, all_experiments, experiment_descriptions, ExperimentResult, ExperimentParam
from .runner import run, load_config, execute_experiment, ExperimentConfig

# Auto-import builtin experiments to trigger @register_experiment decorators
from .builtin import *  # noqa
