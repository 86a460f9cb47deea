"""Configuration, experiment driver and metric post-processing."""
from .analysis import (
    GOALS,
    ConvergenceTable,
    convergence_table,
    iterations_to_goal,
    minimum_return,
    state_magnitudes,
    summarize_runs,
    tracking_errors,
)
from .config import ConfigError, RunConfig, load_config, parse_config
from .plots import line_chart

__all__ = [
    "GOALS",
    "ConfigError",
    "ConvergenceTable",
    "RunConfig",
    "convergence_table",
    "iterations_to_goal",
    "line_chart",
    "load_config",
    "minimum_return",
    "parse_config",
    "state_magnitudes",
    "summarize_runs",
    "tracking_errors",
]
