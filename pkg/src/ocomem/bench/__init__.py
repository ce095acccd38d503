"""Benchmark harness: disturbance generators, experiment configs, CLI."""

from .config import ExperimentConfig, load_config, parse_config
from .disturbances import generate_disturbance
from .experiment import ResultRow, build_lower_bound_instance, run_experiment

__all__ = [
    "ExperimentConfig",
    "ResultRow",
    "build_lower_bound_instance",
    "generate_disturbance",
    "load_config",
    "parse_config",
    "run_experiment",
]
