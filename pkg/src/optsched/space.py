"""Uniform solver-facing view of the two state spaces."""

from __future__ import annotations

from typing import Any, Protocol

from . import ao, els
from .bounds import BoundContext, compute_bound_context, f_ao, f_els
from .schedule import Schedule
from .taskgraph import SystemSpec, TaskGraph

MODELS = ("ao", "els")


class StateSpace(Protocol):
    name: str
    graph: TaskGraph
    system: SystemSpec
    ctx: BoundContext
    max_depth: int

    def root(self) -> Any: ...
    def bound(self, state: Any) -> int: ...
    def expand(self, state: Any) -> list[tuple[Any, int]]: ...
    def is_complete(self, state: Any) -> bool: ...
    def depth(self, state: Any) -> int: ...
    def key(self, state: Any) -> bytes: ...
    def schedule(self, state: Any) -> Schedule: ...


class ElsSpace:
    name = "els"

    def __init__(self, g: TaskGraph, sys: SystemSpec) -> None:
        self.graph = g
        self.system = sys
        self.ctx = compute_bound_context(g, sys)
        self.max_depth = g.num_tasks

    def root(self) -> els.ElsState:
        return els.initial_els_state(self.graph, self.system)

    def bound(self, state: els.ElsState) -> int:
        return f_els(state, self.ctx)

    def expand(self, state: els.ElsState) -> list[tuple[els.ElsState, int]]:
        return els.expand_els(state, self.graph, self.system, self.ctx)

    def is_complete(self, state: els.ElsState) -> bool:
        return state.depth == self.max_depth

    def depth(self, state: els.ElsState) -> int:
        return state.depth

    def key(self, state: els.ElsState) -> bytes:
        return els.els_state_key(state)

    def schedule(self, state: els.ElsState) -> Schedule:
        return state.partial


class AoSpace:
    name = "ao"

    def __init__(self, g: TaskGraph, sys: SystemSpec) -> None:
        self.graph = g
        self.system = sys
        self.ctx = compute_bound_context(g, sys)
        self.max_depth = 2 * g.num_tasks

    def root(self) -> ao.AoState:
        if self.graph.num_tasks == 0:
            return ao.ordering_root(ao.allocation_info(self.graph, self.system, (), self.ctx))
        return ao.initial_ao_state(self.graph)

    def bound(self, state: ao.AoState) -> int:
        return f_ao(state, self.ctx)

    def expand(self, state: ao.AoState) -> list[tuple[ao.AoState, int]]:
        if isinstance(state, ao.AllocationState):
            return ao.expand_allocation(state, self.graph, self.system, self.ctx)
        return ao.expand_ordering(state, self.graph, self.system, self.ctx)

    def is_complete(self, state: ao.AoState) -> bool:
        return ao.is_complete_ao(state, self.graph)

    def depth(self, state: ao.AoState) -> int:
        return ao.ao_depth(state)

    def key(self, state: ao.AoState) -> bytes:
        return ao.ao_state_key(state)

    def schedule(self, state: ao.OrderingState) -> Schedule:
        return ao.derive_schedule(state, self.graph)


def make_space(model: str, g: TaskGraph, sys: SystemSpec) -> StateSpace:
    if model == "ao":
        return AoSpace(g, sys)
    if model == "els":
        return ElsSpace(g, sys)
    raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
