"""Experiment configuration, datasets, metrics and the command-line interface."""

from .config import ExperimentConfig, format_config, load_config, parse_config
from .experiment import build_problem, run_experiment, train_schedule

__all__ = ["ExperimentConfig", "build_problem", "format_config", "load_config", "parse_config",
           "run_experiment", "train_schedule"]
