"""Replication in hypergraph partitioning and BSP DAG scheduling.

Partitioning: exact search and ILP models for the (lambda - 1) metric with
nodes allowed on several processors.  Scheduling: a BSP cost model, a
non-replicating baseline, local-search passes that trade communication for
recomputation, and exact solvers for tiny instances.
"""

from .baseline import SchedulerConfig, baseline_schedule, greedy_schedule, hill_climb, sequential_schedule
from .bsp import BspParams, BspSchedule, superstep_costs, total_cost, validate_schedule
from .model import Dag, Hypergraph, ReplicationError
from .partition import (BalanceSpec, ReplicatedPartition, exact_partition_search, lambda_of_edge,
                        partition_cost)
from .partition_ilp import build_partition_ilp, decode_partition
from .replicate import PASSES, MoveReport, advanced_heuristic, basic_pass, cleanup
from .sched_ilp import build_sched_ilp, exact_tiny_scheduler
from .stats import CostReport, CostRow, geomean

__version__ = "0.1.0"

__all__ = [
    "BalanceSpec", "BspParams", "BspSchedule", "CostReport", "CostRow", "Dag", "Hypergraph",
    "MoveReport", "PASSES", "ReplicatedPartition", "ReplicationError", "SchedulerConfig",
    "advanced_heuristic", "baseline_schedule", "basic_pass", "build_partition_ilp", "build_sched_ilp",
    "cleanup", "decode_partition", "exact_partition_search", "exact_tiny_scheduler", "geomean",
    "greedy_schedule", "hill_climb", "lambda_of_edge", "partition_cost", "sequential_schedule",
    "superstep_costs", "total_cost", "validate_schedule",
]
