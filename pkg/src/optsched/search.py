"""Sequential solvers: A* and depth-first branch-and-bound."""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Any

from .schedule import Schedule, makespan
from .space import StateSpace

DEFAULT_TIMEOUT = 120.0
_CLOCK_EVERY = 256


@dataclass(frozen=True)
class Limits:
    timeout: float | None = DEFAULT_TIMEOUT
    max_open: int | None = None

    def deadline(self, start: float) -> float:
        return math.inf if self.timeout is None else start + self.timeout


@dataclass
class SearchResult:
    schedule: Schedule
    makespan: int
    states_expanded: int
    states_generated: int
    wall_time: float
    peak_open_size: int
    solver: str
    max_branching: int = 0
    max_depth: int = 0
    stats: dict[str, Any] = field(default_factory=dict)

    @property
    def states_per_second(self) -> float:
        return self.states_expanded / self.wall_time if self.wall_time > 0 else math.inf


class SearchAborted(RuntimeError):
    """Search stopped before proving optimality; ``stats`` holds the partial counters."""

    def __init__(self, message: str, stats: dict[str, Any]) -> None:
        super().__init__(message)
        self.stats = stats


class SearchTimeout(SearchAborted):
    pass


class MemoryBudgetExceeded(SearchAborted):
    pass


def _result(space: StateSpace, state, solver: str, started: float, **counters) -> SearchResult:
    sched = space.schedule(state)
    return SearchResult(
        schedule=sched,
        makespan=makespan(sched, space.graph),
        wall_time=time.perf_counter() - started,
        solver=solver,
        **counters,
    )


def astar(
    space: StateSpace,
    limits: Limits = Limits(),
    dup_detect: bool = False,
    trace: list[int] | None = None,
) -> SearchResult:
    """Best-first search; the first complete state popped is optimal.

    Ties on ``f`` go to the deeper state, then to insertion order. With
    ``dup_detect`` a generated state whose canonical key was already seen is
    dropped. ``trace``, when given, receives the ``f`` of every popped state.
    """
    started = time.perf_counter()
    deadline = limits.deadline(started)
    max_open = limits.max_open
    tie = itertools.count()
    root = space.root()
    heap = [(space.bound(root), -space.depth(root), next(tie), root)]
    seen = {space.key(root)} if dup_detect else None
    expanded = generated = duplicates = 0
    peak = 1
    max_b = max_d = 0
    solver = f"astar-{space.name}" + ("-dd" if dup_detect else "")

    def counters() -> dict[str, Any]:
        return dict(
            states_expanded=expanded,
            states_generated=generated + 1,
            peak_open_size=peak,
            max_branching=max_b,
            max_depth=max_d,
        )

    while heap:
        f, negdepth, _, state = heapq.heappop(heap)
        if trace is not None:
            trace.append(f)
        if space.is_complete(state):
            return _result(space, state, solver, started, stats={"duplicates": duplicates}, **counters())
        expanded += 1
        if expanded % _CLOCK_EVERY == 0 and time.perf_counter() > deadline:
            raise SearchTimeout(f"{solver}: timed out", counters())
        children = space.expand(state)
        generated += len(children)
        if len(children) > max_b:
            max_b = len(children)
        depth = 1 - negdepth
        if depth > max_d:
            max_d = depth
        for child, cf in children:
            if seen is not None:
                k = space.key(child)
                if k in seen:
                    duplicates += 1
                    continue
                seen.add(k)
            heapq.heappush(heap, (cf, -depth, next(tie), child))
        if len(heap) > peak:
            peak = len(heap)
            if max_open is not None and peak > max_open:
                raise MemoryBudgetExceeded(f"{solver}: open set exceeded {max_open} states", counters())
    raise RuntimeError("state space exhausted without a complete schedule")


def dfbnb(space: StateSpace, limits: Limits = Limits()) -> SearchResult:
    """Depth-first branch-and-bound with an incumbent.

    A popped state is expanded only if its bound beats the incumbent. Children
    are pushed worst-first so the most promising one is explored next; those
    already no better than the incumbent are not pushed at all.
    """
    started = time.perf_counter()
    deadline = limits.deadline(started)
    root = space.root()
    stack = [(space.bound(root), 0, root)]
    best_f = math.inf
    best = None
    expanded = generated = pruned = 0
    peak = 1
    max_b = max_d = 0
    solver = f"dfbnb-{space.name}"

    def counters() -> dict[str, Any]:
        return dict(
            states_expanded=expanded,
            states_generated=generated + 1,
            peak_open_size=peak,
            max_branching=max_b,
            max_depth=max_d,
        )

    while stack:
        f, depth, state = stack.pop()
        if f >= best_f:
            pruned += 1
            continue
        expanded += 1
        if expanded % _CLOCK_EVERY == 0 and time.perf_counter() > deadline:
            stats = counters()
            stats["incumbent"] = None if best is None else best_f
            raise SearchTimeout(f"{solver}: timed out", stats)
        if depth > max_d:
            max_d = depth
        if space.is_complete(state):
            best_f, best = f, state
            continue
        children = space.expand(state)
        generated += len(children)
        if len(children) > max_b:
            max_b = len(children)
        children.sort(key=lambda c: c[1], reverse=True)
        for child, cf in children:
            if cf < best_f:
                stack.append((cf, depth + 1, child))
            else:
                pruned += 1
        if len(stack) > peak:
            peak = len(stack)
    if best is None:
        raise RuntimeError("state space exhausted without a complete schedule")
    return _result(space, best, solver, started, stats={"pruned": pruned}, **counters())
