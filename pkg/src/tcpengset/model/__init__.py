"""Analytical TCP-Engset model."""
from .engset import EngsetSolution, aggregate_rates, birth_death_rates, engset_probabilities, solve
from .flights import FlightSchedule, compute_flights, compute_on0, compute_on0_ns, peak_rate, renormalize
from .path import PathParams, Saturation, path_from_rtt0, path_params, saturation_check, tx_ns, tx_time
from .pipeline import (ModelResult, SingleConnection, buffer_rule, evaluate, n_for_load, reference_rules,
                       single_connection)
from .queueing import (QueueModel, buffer_size, loss_rate, queue_stats, round_contributions, round_share,
                       single_connection_queue_mean)

__all__ = [
    "EngsetSolution", "aggregate_rates", "birth_death_rates", "engset_probabilities", "solve",
    "FlightSchedule", "compute_flights", "compute_on0", "compute_on0_ns", "peak_rate", "renormalize",
    "PathParams", "Saturation", "path_from_rtt0", "path_params", "saturation_check", "tx_ns", "tx_time",
    "ModelResult", "SingleConnection", "buffer_rule", "evaluate", "n_for_load", "reference_rules",
    "single_connection", "QueueModel", "buffer_size", "loss_rate", "queue_stats", "round_contributions",
    "round_share", "single_connection_queue_mean",
]
