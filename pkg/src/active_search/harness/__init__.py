"""Experiment orchestration and statistics."""

from .experiment import ConfigError, ExperimentConfig, ExperimentRecord, run_experiment
from .stats import TTestResult, paired_t_test
from .tables import adaptivity_ratio_table, budget_waypoint_table
from .synthetic import generate_clustered_instance
from .toy import generate_toy_instance
