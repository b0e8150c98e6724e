"""Packet-level simulator of superposed ON-OFF TCP sources on a dumbbell."""
from .engine import run_scenario
from .metrics import SimMetrics, drop_analysis, queue_distributions
from .scenario import Scenario, ScenarioError, load_scenario, parse_label, scenario_from_config, scenario_from_label


def bd_occupancy(metrics):
    return metrics.bd_occupancy()


__all__ = ["run_scenario", "SimMetrics", "drop_analysis", "queue_distributions", "bd_occupancy",
           "Scenario", "ScenarioError", "load_scenario", "parse_label", "scenario_from_config",
           "scenario_from_label"]
