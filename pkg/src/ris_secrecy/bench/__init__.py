"""Experiment harness: configs, sweeps, CSV and plots."""

from .config import ExperimentConfig, load_config, parse_config
from .output import emit_csv, emit_plots, read_csv
from .runner import ResultTable, run_experiment

__all__ = ["ExperimentConfig", "ResultTable", "emit_csv", "emit_plots", "load_config", "parse_config", "read_csv", "run_experiment"]
