"""Seeded experiment runner behind the ``semipriv`` command."""

from .config import ConfigError, ExperimentConfig, default_config
from .experiments import run_audit, run_cover_rate, run_experiment, run_learn_curve, run_reduction, run_scaling

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "default_config",
    "run_audit",
    "run_cover_rate",
    "run_experiment",
    "run_learn_curve",
    "run_reduction",
    "run_scaling",
]
