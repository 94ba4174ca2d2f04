"""Allocation-Ordering (AO) state space.

Phase one walks the canonical task order and puts each task into an
existing subset or opens a new one (at most ``num_procs`` subsets), which
reaches every partition of the tasks exactly once. Subset ``i`` runs on
processor ``i``. Phase two fixes the task sequence of each processor, one
task per step, visiting processors round-robin by depth. Since every
decision is made in a fixed order, no state is reachable by two paths.
"""

from __future__ import annotations

from array import array
from dataclasses import dataclass
from typing import NamedTuple, Union

from .bounds import BoundContext, allocation_bound, ordering_evaluate
from .schedule import Schedule, earliest_start
from .taskgraph import CycleError, SystemSpec, TaskGraph


class AllocationState(NamedTuple):
    next_task_index: int
    subsets: tuple[tuple[int, ...], ...]
    proc_of: tuple[int, ...]  # -1 while unallocated
    loads: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class AllocationInfo:
    """Per-allocation data shared by every ordering state below it."""

    graph: TaskGraph
    num_procs: int
    proc_of: tuple[int, ...]
    proc_tasks: tuple[tuple[int, ...], ...]
    loads: tuple[int, ...]
    same_proc_ancestors: tuple[int, ...]
    succ: tuple[tuple[tuple[int, int], ...], ...]  # (child, cost once allocated)
    indeg: tuple[int, ...]
    full_mask: int
    alloc_bound: int


class OrderingState(NamedTuple):
    info: AllocationInfo
    sequences: tuple[tuple[int, ...], ...]
    ordered: int  # bitmask of sequenced tasks
    ordering_depth: int

    @property
    def allocation(self) -> tuple[int, ...]:
        return self.info.proc_of


AoState = Union[AllocationState, OrderingState]


def initial_ao_state(g: TaskGraph) -> AllocationState:
    return AllocationState(0, (), (-1,) * g.num_tasks, ())


def allocation_info(g: TaskGraph, sys: SystemSpec, proc_of: tuple[int, ...], ctx: BoundContext) -> AllocationInfo:
    num_procs = sys.num_procs
    proc_tasks = tuple(tuple(t for t in g.order if proc_of[t] == p) for p in range(num_procs))
    loads = tuple(sum(g.weights[t] for t in ts) for ts in proc_tasks)
    masks = [0] * num_procs
    for p, ts in enumerate(proc_tasks):
        for t in ts:
            masks[p] |= 1 << t
    anc = g.ancestor_masks
    spa = tuple(anc[t] & masks[proc_of[t]] for t in g.tasks)
    succ = tuple(
        tuple((v, 0 if proc_of[v] == proc_of[u] else c) for v, c in g.children[u]) for u in g.tasks
    )
    indeg = tuple(len(ps) for ps in g.parents)
    return AllocationInfo(
        graph=g,
        num_procs=num_procs,
        proc_of=proc_of,
        proc_tasks=proc_tasks,
        loads=loads,
        same_proc_ancestors=spa,
        succ=succ,
        indeg=indeg,
        full_mask=(1 << g.num_tasks) - 1,
        alloc_bound=allocation_bound(ctx, proc_of, loads),
    )


def ordering_root(info: AllocationInfo) -> OrderingState:
    return OrderingState(info, ((),) * info.num_procs, 0, 0)


def expand_allocation(
    state: AllocationState, g: TaskGraph, sys: SystemSpec, ctx: BoundContext
) -> list[tuple[AoState, int]]:
    """One child per existing subset, plus one opening a new subset."""
    k = state.next_task_index
    t = g.order[k]
    wt = g.weights[t]
    finishing = k + 1 == g.num_tasks
    options = list(range(len(state.subsets)))
    if len(state.subsets) < sys.num_procs:
        options.append(len(state.subsets))
    out: list[tuple[AoState, int]] = []
    for i in options:
        if i < len(state.subsets):
            subsets = state.subsets[:i] + (state.subsets[i] + (t,),) + state.subsets[i + 1 :]
            loads = state.loads[:i] + (state.loads[i] + wt,) + state.loads[i + 1 :]
        else:
            subsets = state.subsets + ((t,),)
            loads = state.loads + (wt,)
        proc_of = state.proc_of[:t] + (i,) + state.proc_of[t + 1 :]
        if finishing:
            info = allocation_info(g, sys, proc_of, ctx)
            out.append((ordering_root(info), info.alloc_bound))
        else:
            child = AllocationState(k + 1, subsets, proc_of, loads)
            out.append((child, allocation_bound(ctx, proc_of, loads)))
    return out


def next_processor(state: OrderingState) -> int:
    """Round-robin from ``ordering_depth mod num_procs``, skipping finished processors."""
    info = state.info
    num_procs = info.num_procs
    for i in range(num_procs):
        p = (state.ordering_depth + i) % num_procs
        if len(state.sequences[p]) < len(info.proc_tasks[p]):
            return p
    raise ValueError("ordering state is complete")


def ordering_free_tasks(state: OrderingState, g: TaskGraph, proc: int) -> list[int]:
    """Unsequenced tasks on ``proc`` whose same-processor ancestors are all sequenced."""
    info = state.info
    ordered = state.ordered
    spa = info.same_proc_ancestors
    return sorted(t for t in info.proc_tasks[proc] if not ordered >> t & 1 and spa[t] & ~ordered == 0)


def expand_ordering(
    state: OrderingState, g: TaskGraph, sys: SystemSpec, ctx: BoundContext
) -> list[tuple[AoState, int]]:
    """Append each free task of the round-robin processor; dead children are dropped."""
    p = next_processor(state)
    info = state.info
    out: list[tuple[AoState, int]] = []
    for t in ordering_free_tasks(state, g, p):
        seqs = state.sequences[:p] + (state.sequences[p] + (t,),) + state.sequences[p + 1 :]
        ordered = state.ordered | (1 << t)
        res = ordering_evaluate(info, seqs, ordered)
        if res is None:
            continue
        out.append((OrderingState(info, seqs, ordered, state.ordering_depth + 1), res[0]))
    return out


def expand_ao(state: AoState, g: TaskGraph, sys: SystemSpec, ctx: BoundContext) -> list[tuple[AoState, int]]:
    if isinstance(state, AllocationState):
        return expand_allocation(state, g, sys, ctx)
    return expand_ordering(state, g, sys, ctx)


def is_complete_ao(state: AoState, g: TaskGraph) -> bool:
    return isinstance(state, OrderingState) and state.ordering_depth == g.num_tasks


def ao_depth(state: AoState) -> int:
    if isinstance(state, AllocationState):
        return state.next_task_index
    return len(state.info.proc_of) + state.ordering_depth


def ao_state_key(state: AoState) -> bytes:
    """Full state content: the partition plus, in phase two, the sequences."""
    buf = array("q")
    if isinstance(state, AllocationState):
        buf.append(0)
        buf.append(state.next_task_index)
        for sub in state.subsets:
            buf.append(len(sub))
            buf.extend(sub)
    else:
        buf.append(1)
        buf.extend(state.info.proc_of)
        for seq in state.sequences:
            buf.append(len(seq))
            buf.extend(seq)
    return buf.tobytes()


def derive_schedule(state: OrderingState, g: TaskGraph) -> Schedule:
    """Earliest-start schedule honouring the allocation and every sequence.

    Tasks are placed in a topological order of the DAG plus the per-processor
    chain edges.
    """
    if state.ordering_depth != g.num_tasks:
        raise ValueError("ordering state is not complete")
    n = g.num_tasks
    preds: list[list[int]] = [[u for u, _ in g.parents[v]] for v in range(n)]
    for seq in state.sequences:
        for a, b in zip(seq, seq[1:]):
            preds[b].append(a)
    indeg = [len(p) for p in preds]
    succ: list[list[int]] = [[] for _ in range(n)]
    for v, ps in enumerate(preds):
        for u in ps:
            succ[u].append(v)
    ready = [t for t in range(n) if indeg[t] == 0]
    proc_of = state.info.proc_of
    partial = Schedule()
    placed = 0
    while ready:
        t = ready.pop()
        partial = partial.with_task(t, proc_of[t], earliest_start(partial, g, t, proc_of[t]))
        placed += 1
        for v in succ[t]:
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
    if placed != n:
        raise CycleError("allocation and sequences form a cyclic constraint graph")
    return partial
