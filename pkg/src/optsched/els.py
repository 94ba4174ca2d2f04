"""Exhaustive List Scheduling (ELS) state space.

A state is a partial schedule built in list-scheduling fashion: a child
places one free task at its earliest start on one processor. Empty
processors are interchangeable, so only the lowest-indexed empty processor
is ever offered (processor normalisation); non-empty processors therefore
always form a prefix ``0..k-1``.
"""

from __future__ import annotations

from array import array
from typing import NamedTuple

from .bounds import BoundContext, data_ready_min, els_pending_sources
from .schedule import Schedule
from .taskgraph import SystemSpec, TaskGraph


class ElsState(NamedTuple):
    proc: tuple[int, ...]  # -1 when unscheduled
    start: tuple[int, ...]  # -1 when unscheduled
    proc_finish: tuple[int, ...]
    depth: int
    mask: int  # bit t set when task t is scheduled
    crit: int  # path term of the bound, see f_els
    idle: int  # idle time committed before each processor's last finish

    @property
    def scheduled(self) -> frozenset[int]:
        return frozenset(t for t, p in enumerate(self.proc) if p >= 0)

    @property
    def partial(self) -> Schedule:
        return Schedule({t: (p, s) for t, (p, s) in enumerate(zip(self.proc, self.start)) if p >= 0})


def initial_els_state(g: TaskGraph, sys: SystemSpec) -> ElsState:
    n = g.num_tasks
    return ElsState((-1,) * n, (-1,) * n, (0,) * sys.num_procs, 0, 0, 0, 0)


def free_tasks(state: ElsState, g: TaskGraph) -> list[int]:
    """Unscheduled tasks whose parents are all scheduled, ascending."""
    mask = state.mask
    pm = g.parent_masks
    return [t for t in range(g.num_tasks) if not mask >> t & 1 and pm[t] & ~mask == 0]


def is_complete_els(state: ElsState, g: TaskGraph) -> bool:
    return state.depth == g.num_tasks


def expand_els(
    state: ElsState, g: TaskGraph, sys: SystemSpec, ctx: BoundContext, normalize: bool = True
) -> list[tuple[ElsState, int]]:
    """All children with their bounds, free tasks ascending then processors ascending.

    ``normalize=False`` offers every processor, empty or not; the searches
    never use it, but it exposes the raw branching factor.
    """
    w = g.weights
    bl = ctx.bottom_level
    parents = g.parents
    n = g.num_tasks
    num_procs = sys.num_procs
    proc, start, finish = state.proc, state.start, state.proc_finish
    used = 0
    while used < num_procs and finish[used] > 0:
        used += 1
    targets = range(min(used + 1, num_procs) if normalize else num_procs)
    kids = g.children
    depth = state.depth + 1
    complete = depth == n
    mk = max(finish)
    work_plus_idle = ctx.total_work + state.idle
    out = []
    for t in free_tasks(state, g):
        mask = state.mask | (1 << t)
        pending = els_pending_sources(ctx, mask)
        ps = parents[t]
        wt = w[t]
        for p in targets:
            est = finish[p]
            for u, c in ps:
                x = start[u] + w[u] + (0 if proc[u] == p else c)
                if x > est:
                    est = x
            end = est + wt
            new_proc = proc[:t] + (p,) + proc[t + 1 :]
            new_start = start[:t] + (est,) + start[t + 1 :]
            new_finish = finish[:p] + (end,) + finish[p + 1 :]
            crit = max(state.crit, est + bl[t])
            for v, _ in kids[t]:
                x = data_ready_min(v, parents[v], w, new_proc, new_start, targets.stop) + bl[v]
                if x > crit:
                    crit = x
            idle = state.idle + est - finish[p]
            new_mk = end if end > mk else mk
            if complete:
                f = new_mk
            else:
                f = max(crit, pending, -(-(work_plus_idle + est - finish[p]) // num_procs), new_mk)
            out.append((ElsState(new_proc, new_start, new_finish, depth, mask, crit, idle), f))
    return out


def els_state_key(state: ElsState) -> bytes:
    """Canonical identity up to processor relabelling.

    Per-processor ``(task, start)`` sequences, sorted across processors and
    packed as machine integers.
    """
    seqs: dict[int, list[tuple[int, int]]] = {}
    for t, (p, s) in enumerate(zip(state.proc, state.start)):
        if p >= 0:
            seqs.setdefault(p, []).append((s, t))
    canon = sorted(tuple((t, s) for s, t in sorted(seq)) for seq in seqs.values())
    buf = array("q")
    for seq in canon:
        buf.append(len(seq))
        for t, s in seq:
            buf.append(t)
            buf.append(s)
    return buf.tobytes()

