"""Verification experiments and the command-line harness."""

from .config import EXPERIMENTS, ConfigError, ExperimentConfig, ResultRow
from .harness import run_experiment, write_outputs

__all__ = ["EXPERIMENTS", "ConfigError", "ExperimentConfig", "ResultRow", "run_experiment", "write_outputs"]
