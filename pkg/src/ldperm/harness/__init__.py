"""Experiment orchestration: data, baselines, configs, and result files."""

from ldperm.harness.baseline import BaselineResult, baseline_optimum
from ldperm.harness.config import ConfigError, ExperimentConfig, load_config, parse_config
from ldperm.harness.data import Dataset, generate_synthetic
from ldperm.harness.experiment import ExperimentResult, PlayerPool, run_experiment

__all__ = [
    "BaselineResult",
    "ConfigError",
    "Dataset",
    "ExperimentConfig",
    "ExperimentResult",
    "PlayerPool",
    "baseline_optimum",
    "generate_synthetic",
    "load_config",
    "parse_config",
    "run_experiment",
]
