"""Optimal task scheduling with communication delays by state-space search."""

from .generators import Structure, generate
from .schedule import Schedule, earliest_start, is_valid, makespan
from .taskgraph import SystemSpec, TaskGraph, ccr, parse_task_graph, serialize_task_graph, topological_order

__version__ = "0.1.0"

__all__ = [
    "Schedule",
    "Structure",
    "SystemSpec",
    "TaskGraph",
    "ccr",
    "earliest_start",
    "generate",
    "is_valid",
    "makespan",
    "parse_task_graph",
    "serialize_task_graph",
    "topological_order",
]
