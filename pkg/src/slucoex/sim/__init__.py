"""Topology, event engine and metrics."""

from .topology import Topology, place_nodes
from .world import (Decision, McState, MetricsReport, SlotRecord, World, evaluate_outcomes, run, step,
                    wifi_closed_loop_power)

__all__ = ["Topology", "place_nodes", "Decision", "McState", "MetricsReport", "SlotRecord", "World",
           "evaluate_outcomes", "run", "step", "wifi_closed_loop_power"]
