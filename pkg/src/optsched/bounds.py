"""Admissible lower bounds on the makespan reachable from a search state.

Every bound is the maximum of several classic admissible terms, all in
integer arithmetic. A complete state always evaluates to its true makespan.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from .taskgraph import SystemSpec, TaskGraph


@dataclass(frozen=True)
class BoundContext:
    graph: TaskGraph
    bottom_level: tuple[int, ...]
    total_work: int
    num_procs: int
    # source tasks, highest bottom level first
    sources_by_level: tuple[int, ...]

    @property
    def load_bound(self) -> int:
        return -(-self.total_work // self.num_procs)


def compute_bound_context(g: TaskGraph, sys: SystemSpec) -> BoundContext:
    """Bottom levels ignore communication, so they stay admissible for any
    processor count."""
    w = g.weights
    bl = [0] * g.num_tasks
    for u in reversed(g.topo):
        bl[u] = w[u] + max((bl[v] for v, _ in g.children[u]), default=0)
    sources = sorted((t for t in g.tasks if not g.parents[t]), key=lambda t: (-bl[t], t))
    return BoundContext(g, tuple(bl), sum(w), sys.num_procs, tuple(sources))


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def els_pending_sources(ctx: BoundContext, mask: int) -> int:
    """Largest bottom level among unscheduled source tasks (they start at >= 0)."""
    for t in ctx.sources_by_level:
        if not mask >> t & 1:
            return ctx.bottom_level[t]
    return 0


def data_ready_min(v: int, parents, w, proc, start, span: int) -> int:
    """Earliest time data from the already scheduled parents of ``v`` can
    reach it, minimised over processors ``0..span-1``.

    Unscheduled parents are ignored, so the value only grows as the schedule
    is extended. Processors at or beyond ``span`` are empty and behave like
    any other processor holding none of the parents.
    """
    best = None
    for q in range(span):
        dq = 0
        for u, c in parents:
            pu = proc[u]
            if pu >= 0:
                x = start[u] + w[u] + (0 if pu == q else c)
                if x > dq:
                    dq = x
        if best is None or dq < best:
            best = dq
    return best or 0


def f_els(state, ctx: BoundContext) -> int:
    """Bound for an ELS partial schedule.

    max of: the critical path through scheduled tasks (start + bottom level,
    plus bottom levels of unscheduled sources), the data-ready time of every
    unscheduled task with a scheduled parent plus its bottom level, the load
    bound counting idle gaps already committed, and the current partial
    makespan.
    """
    w = ctx.graph.weights
    mk = max(state.proc_finish, default=0)
    if state.depth == ctx.graph.num_tasks:
        return mk
    bl = ctx.bottom_level
    crit = els_pending_sources(ctx, state.mask)
    busy = 0
    for t, st in enumerate(state.start):
        if st >= 0:
            crit = max(crit, st + bl[t])
            busy += w[t]
    g = ctx.graph
    span = min(sum(1 for x in state.proc_finish if x > 0) + 1, ctx.num_procs)
    for v in range(g.num_tasks):
        if state.proc[v] < 0 and any(state.proc[u] >= 0 for u, _ in g.parents[v]):
            crit = max(crit, data_ready_min(v, g.parents[v], w, state.proc, state.start, span) + bl[v])
    idle = sum(state.proc_finish) - busy
    return max(crit, _ceil_div(ctx.total_work + idle, ctx.num_procs), mk)


def allocated_critical_path(g: TaskGraph, proc_of: Sequence[int]) -> int:
    """Longest path where an edge costs its communication weight only when
    both ends are allocated to different processors."""
    w = g.weights
    parents = g.parents
    finish = [0] * g.num_tasks
    best = 0
    for v in g.topo:
        pv = proc_of[v]
        t = 0
        for u, c in parents[v]:
            pu = proc_of[u]
            x = finish[u] + c if (pu >= 0 and pv >= 0 and pu != pv) else finish[u]
            if x > t:
                t = x
        t += w[v]
        finish[v] = t
        if t > best:
            best = t
    return best


def allocation_bound(ctx: BoundContext, proc_of: Sequence[int], loads: Sequence[int]) -> int:
    return max(max(loads, default=0), allocated_critical_path(ctx.graph, proc_of), ctx.load_bound)


def ordering_evaluate(info, sequences: Sequence[Sequence[int]], ordered: int) -> tuple[int, list[int]] | None:
    """Top levels over the combined constraint graph of an ordering state.

    The constraint graph holds the DAG edges (zero cost within a processor),
    the chain edges of every fixed sequence, and an edge from the last
    sequenced task of each processor to each of its unsequenced tasks.
    Returns ``(f, start)`` or ``None`` when the constraints are cyclic, i.e.
    no valid completion exists.
    """
    g = info.graph
    w = g.weights
    n = g.num_tasks
    indeg = list(info.indeg)
    extra: list[Sequence[int]] = [()] * n
    proc_tasks = info.proc_tasks
    for p, seq in enumerate(sequences):
        if not seq:
            continue
        for a, b in zip(seq, seq[1:]):
            extra[a] = (b,)
            indeg[b] += 1
        rest = [t for t in proc_tasks[p] if not ordered >> t & 1]
        extra[seq[-1]] = rest
        for t in rest:
            indeg[t] += 1

    succ = info.succ
    start = [0] * n
    stack = [t for t in range(n) if indeg[t] == 0]
    seen = 0
    lp = 0
    while stack:
        u = stack.pop()
        seen += 1
        fu = start[u] + w[u]
        if fu > lp:
            lp = fu
        for v, c in succ[u]:
            x = fu + c
            if x > start[v]:
                start[v] = x
            indeg[v] -= 1
            if indeg[v] == 0:
                stack.append(v)
        for v in extra[u]:
            if fu > start[v]:
                start[v] = fu
            indeg[v] -= 1
            if indeg[v] == 0:
                stack.append(v)
    if seen < n:
        return None
    if ordered == info.full_mask:
        return lp, start
    f = max(lp, info.alloc_bound)
    loads = info.loads
    for p, seq in enumerate(sequences):
        if seq:
            last = seq[-1]
            done = sum(w[t] for t in seq)
            x = start[last] + w[last] + loads[p] - done
            if x > f:
                f = x
    return f, start


def f_ao(state, ctx: BoundContext) -> int:
    """Bound for either AO state kind.

    Allocation states: max of the heaviest subset, the allocated critical
    path and the global load bound. Ordering states add the longest path
    through the fixed sequence prefixes and, per processor, the finish of its
    sequenced prefix plus its remaining allocated work.
    """
    if hasattr(state, "sequences"):
        res = ordering_evaluate(state.info, state.sequences, state.ordered)
        if res is None:
            raise ValueError("ordering state has cyclic constraints")
        return res[0]
    return allocation_bound(ctx, state.proc_of, state.loads)
