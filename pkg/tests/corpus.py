"""The fixed small-instance corpus shared by the oracle and acceptance tests."""

from __future__ import annotations

import hashlib
import json
from functools import cache
from pathlib import Path

from optsched.generators import Structure, generate
from optsched.taskgraph import SystemSpec, TaskGraph, serialize_task_graph

SEED = 1
SIZES = (4, 5, 6, 7, 8)
CCRS = (0.1, 1.0, 10.0)
PROCS = (2, 3)
OPTIMA_FILE = Path(__file__).parent / "data" / "oracle_optima.json"


def instance_id(structure: Structure, n: int, ccr: float, procs: int) -> str:
    return f"{structure.value.lower()}-n{n}-ccr{ccr:g}-p{procs}"


def corpus(max_tasks: int = 8, max_procs: int = 3):
    """Yield ``(id, graph, system)`` for every corpus instance within the limits."""
    for s in Structure:
        for n in SIZES:
            if n > max_tasks:
                continue
            for ccr in (0.0,) if s is Structure.INDEPENDENT else CCRS:
                g = graph(s, n, ccr)
                for p in PROCS:
                    if p <= max_procs:
                        yield instance_id(s, n, ccr, p), g, SystemSpec(p)


@cache
def graph(structure: Structure, n: int, ccr: float) -> TaskGraph:
    return generate(structure, n, ccr, SEED)


def digest(g: TaskGraph) -> str:
    return hashlib.sha256(serialize_task_graph(g).encode()).hexdigest()[:16]


@cache
def frozen_optima() -> dict[str, dict]:
    return json.loads(OPTIMA_FILE.read_text())
