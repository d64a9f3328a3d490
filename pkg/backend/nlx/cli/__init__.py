"""Experiment configs, the staged run pipeline and parameter sweeps."""

from .config_models import ExperimentConfig, load_config, parse_config
from .runner import RunState, build_pipeline, run_experiment
from .sweep import sweep

__all__ = [
    "ExperimentConfig",
    "RunState",
    "build_pipeline",
    "load_config",
    "parse_config",
    "run_experiment",
    "sweep",
]
