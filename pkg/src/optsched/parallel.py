"""Shared-memory parallel branch-and-bound: PA*, PA*-DD and PDFS.

A sequential A* run produces enough open states to seed every worker
round-robin. Each worker then searches its own subtrees with a private open
structure (a heap for PA*, a stack for PDFS), periodically refreshing its
copy of the shared incumbent. A worker whose structure runs dry becomes
idle and steals single states from random victims: the best state for PA*,
the shallowest for PDFS. The pool terminates once every worker is idle.

Workers are threads. The shared cells (incumbent, idle counter, duplicate
store) are guarded by locks, and a worker's open structure is locked for
every push, pop and steal, so a pop and a steal can never return the same
state.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import math
import random
import threading
import time
from collections import deque
from collections.abc import Iterable
from dataclasses import dataclass, field
from typing import Any

from .schedule import makespan
from .search import Limits, MemoryBudgetExceeded, SearchResult, SearchTimeout
from .space import StateSpace

DEFAULT_SYNC_THRESHOLD = 100_000
DEFAULT_SEED_FACTOR = 8
_CLOCK_EVERY = 256
_MAX_BACKOFF = 0.002


class StealPolicy(str, enum.Enum):
    HEAD = "head"  # best state of a priority queue
    TAIL = "tail"  # bottom (shallowest) state of a stack


class Incumbent:
    """Best complete solution found so far; its ``f`` only ever decreases."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self.f: float = math.inf
        self.state: Any = None
        self.history: list[int] = []

    def read(self) -> float:
        return self.f

    def offer(self, f: int, state: Any) -> bool:
        """Install ``state`` if strictly better; ties keep the incumbent."""
        with self._lock:
            if f < self.f:
                self.f = f
                self.state = state
                self.history.append(f)
                return True
            return False


class AtomicCounter:
    def __init__(self, value: int = 0) -> None:
        self._lock = threading.Lock()
        self.value = value

    def add(self, delta: int) -> int:
        with self._lock:
            self.value += delta
            return self.value

    def increment(self) -> int:
        return self.add(1)

    def decrement(self) -> int:
        return self.add(-1)


class KeyStore:
    """Concurrent set with insert-if-absent."""

    def __init__(self, keys: Iterable[bytes] = ()) -> None:
        self._lock = threading.Lock()
        self._keys = set(keys)

    def insert_if_absent(self, key: bytes) -> bool:
        with self._lock:
            if key in self._keys:
                return False
            self._keys.add(key)
            return True

    def __len__(self) -> int:
        return len(self._keys)

    def __contains__(self, key: bytes) -> bool:
        return key in self._keys


@dataclass(eq=False)
class Worker:
    wid: int
    policy: StealPolicy
    open: Any  # list used as a heap (HEAD) or deque used as a stack (TAIL)
    lock: threading.Lock = field(default_factory=threading.Lock)
    has_work: bool = True
    examined: int = 0
    generated: int = 0
    pruned: int = 0
    duplicates: int = 0
    flushed: int = 0
    steals: int = 0
    peak_open: int = 0
    best_reads: list[float] = field(default_factory=list)
    # heap tie-break; (wid, next(tie)) is unique across all workers
    tie: Any = field(default_factory=itertools.count)

    def push(self, entry: tuple) -> None:
        with self.lock:
            if self.policy is StealPolicy.HEAD:
                heapq.heappush(self.open, entry)
            else:
                self.open.append(entry)


@dataclass(eq=False)
class WorkerPoolState:
    workers: list[Worker]
    best: Incumbent = field(default_factory=Incumbent)
    idle: AtomicCounter = field(default_factory=AtomicCounter)
    dup_store: KeyStore | None = None
    sync_threshold: int = DEFAULT_SYNC_THRESHOLD
    done: threading.Event = field(default_factory=threading.Event)
    stop: threading.Event = field(default_factory=threading.Event)
    errors: list[BaseException] = field(default_factory=list)
    record_reads: bool = False

    @property
    def open_size(self) -> int:
        return sum(len(w.open) for w in self.workers)


@dataclass
class SeedResult:
    per_worker: list[list[tuple]]
    solved: SearchResult | None
    expanded: int
    generated: int
    peak_open: int
    seen: set[bytes] | None


def distribute_round_robin(items: list, num_workers: int) -> list[list]:
    out: list[list] = [[] for _ in range(num_workers)]
    for i, item in enumerate(items):
        out[i % num_workers].append(item)
    return out


def seed_states(
    space: StateSpace,
    num_workers: int,
    seed_factor: int = DEFAULT_SEED_FACTOR,
    dup_detect: bool = False,
    started: float | None = None,
) -> SeedResult:
    """Run A* until its open set holds ``seed_factor * num_workers`` states.

    The open states are handed out round-robin in pop order as
    ``(f, depth, state)`` entries. If A* pops a complete state first, the
    instance is solved outright and no worker receives anything.
    """
    if num_workers < 1:
        raise ValueError("num_workers must be >= 1")
    started = time.perf_counter() if started is None else started
    target = seed_factor * num_workers
    tie = itertools.count()
    root = space.root()
    heap = [(space.bound(root), -space.depth(root), next(tie), root)]
    seen = {space.key(root)} if dup_detect else None
    expanded = generated = 0
    peak = 1
    while heap and len(heap) < target:
        f, negdepth, _, state = heapq.heappop(heap)
        if space.is_complete(state):
            sched = space.schedule(state)
            solved = SearchResult(
                schedule=sched,
                makespan=makespan(sched, space.graph),
                states_expanded=expanded,
                states_generated=generated + 1,
                wall_time=time.perf_counter() - started,
                peak_open_size=peak,
                solver="seed",
            )
            return SeedResult([[] for _ in range(num_workers)], solved, expanded, generated, peak, seen)
        expanded += 1
        children = space.expand(state)
        generated += len(children)
        for child, cf in children:
            if seen is not None:
                k = space.key(child)
                if k in seen:
                    continue
                seen.add(k)
            heapq.heappush(heap, (cf, negdepth - 1, next(tie), child))
        peak = max(peak, len(heap))
    ordered = [heapq.heappop(heap) for _ in range(len(heap))]
    entries = [(f, -negdepth, state) for f, negdepth, _, state in ordered]
    return SeedResult(distribute_round_robin(entries, num_workers), None, expanded, generated, peak, seen)


def steal(pool: WorkerPoolState, thief: int, policy: StealPolicy, rng: random.Random) -> tuple | None:
    """Take one state from a uniformly random other worker.

    On success the idle counter is decremented on the thief's behalf while
    the victim's lock is still held, so the pool never looks fully idle while
    a stolen state is in flight.
    """
    n = len(pool.workers)
    if n < 2:
        return None
    victim_id = rng.randrange(n - 1)
    if victim_id >= thief:
        victim_id += 1
    victim = pool.workers[victim_id]
    if not victim.has_work:
        return None
    with victim.lock:
        if not victim.open:
            return None
        if policy is StealPolicy.HEAD:
            entry = heapq.heappop(victim.open)
        else:
            entry = victim.open.popleft()
        pool.idle.decrement()
    return entry


_POOL_COUNTERS = (
    "seeded",
    "seed_expanded",
    "worker_generated",
    "examined",
    "pruned",
    "duplicates",
    "flushed",
    "steals",
    "remaining_open",
)


class _Abort(Exception):
    pass


def _check(pool: WorkerPoolState, deadline: float, max_open: int | None) -> None:
    if pool.stop.is_set():
        raise _Abort
    if time.perf_counter() > deadline:
        pool.stop.set()
        raise _Abort
    if max_open is not None and pool.open_size > max_open:
        pool.errors.append(MemoryBudgetExceeded(f"open states exceeded {max_open}", {}))
        pool.stop.set()
        raise _Abort


def _go_idle(pool: WorkerPoolState, me: Worker, rng: random.Random, deadline: float) -> bool:
    """Steal until something is found (True) or every worker is idle (False)."""
    me.has_work = False
    pool.idle.increment()
    n = len(pool.workers)
    failures = 0
    backoff = 1e-5
    while True:
        if pool.stop.is_set() or time.perf_counter() > deadline:
            pool.stop.set()
            raise _Abort
        if pool.idle.value >= n:
            pool.done.set()
            return False
        entry = steal(pool, me.wid, me.policy, rng)
        if entry is not None:
            me.push(entry)
            me.has_work = True
            me.steals += 1
            return True
        failures += 1
        if failures >= n:
            failures = 0
            pool.done.wait(backoff)
            backoff = min(backoff * 2, _MAX_BACKOFF)


def _pastar_worker(
    pool: WorkerPoolState, me: Worker, space: StateSpace, rng: random.Random, deadline: float, max_open: int | None
) -> None:
    heap = me.open
    lock = me.lock
    best = pool.best
    dup = pool.dup_store
    local_best = best.read()
    threshold = pool.sync_threshold
    counter = 0
    tie = me.tie
    pops = 0
    while True:
        while True:
            with lock:
                if not heap:
                    break
                entry = heapq.heappop(heap)
            pops += 1
            if pops % _CLOCK_EVERY == 0:
                _check(pool, deadline, max_open)
            counter += 1
            if counter >= threshold:
                local_best = best.read()
                counter = 0
                if pool.record_reads:
                    me.best_reads.append(local_best)
            f = entry[0]
            state = entry[-1]
            if f >= local_best:
                # the heap is min-ordered: nothing left here can beat local_best
                me.pruned += 1
                with lock:
                    me.flushed += len(heap)
                    heap.clear()
                continue
            me.examined += 1
            if space.is_complete(state):
                best.offer(f, state)
                local_best = best.read()
                if pool.record_reads:
                    me.best_reads.append(local_best)
                continue
            children = space.expand(state)
            me.generated += len(children)
            depth = -entry[1] + 1
            keep = []
            for child, cf in children:
                if cf >= local_best:
                    me.pruned += 1
                elif dup is not None and not dup.insert_if_absent(space.key(child)):
                    me.duplicates += 1
                else:
                    keep.append((cf, -depth, me.wid, next(tie), child))
            with lock:
                for e in keep:
                    heapq.heappush(heap, e)
                if len(heap) > me.peak_open:
                    me.peak_open = len(heap)
        if not _go_idle(pool, me, rng, deadline):
            return


def _pdfs_worker(
    pool: WorkerPoolState, me: Worker, space: StateSpace, rng: random.Random, deadline: float, max_open: int | None
) -> None:
    stack = me.open
    lock = me.lock
    best = pool.best
    local_best = best.read()
    threshold = pool.sync_threshold
    counter = 0
    pops = 0
    while True:
        while True:
            with lock:
                if not stack:
                    break
                f, depth, state = stack.pop()
            pops += 1
            if pops % _CLOCK_EVERY == 0:
                _check(pool, deadline, max_open)
            counter += 1
            if counter >= threshold:
                local_best = best.read()
                counter = 0
                if pool.record_reads:
                    me.best_reads.append(local_best)
            if f >= local_best:
                me.pruned += 1
                continue
            me.examined += 1
            if space.is_complete(state):
                best.offer(f, state)
                local_best = best.read()
                if pool.record_reads:
                    me.best_reads.append(local_best)
                continue
            children = space.expand(state)
            me.generated += len(children)
            keep = [(cf, depth + 1, c) for c, cf in children if cf < local_best]
            me.pruned += len(children) - len(keep)
            keep.sort(key=lambda e: e[0], reverse=True)
            with lock:
                stack.extend(keep)
                if len(stack) > me.peak_open:
                    me.peak_open = len(stack)
        if not _go_idle(pool, me, rng, deadline):
            return


def _run_pool(
    space: StateSpace,
    threads: int,
    policy: StealPolicy,
    dup_detect: bool,
    limits: Limits,
    sync_threshold: int,
    seed: int,
    seed_factor: int,
    record: bool,
    solver: str,
) -> SearchResult:
    if threads < 1:
        raise ValueError("threads must be >= 1")
    started = time.perf_counter()
    deadline = limits.deadline(started)
    seeded = seed_states(space, threads, seed_factor, dup_detect, started)
    if seeded.solved is not None:
        res = seeded.solved
        res.solver = solver
        res.stats = dict.fromkeys(_POOL_COUNTERS, 0)
        res.stats.update(threads=threads, solved_during_seeding=True, incumbent_history=[res.makespan])
        return res

    workers = []
    for wid, entries in enumerate(seeded.per_worker):
        if policy is StealPolicy.HEAD:
            open_: Any = [(f, -d, wid, i, s) for i, (f, d, s) in enumerate(entries)]
            heapq.heapify(open_)
        else:
            # first-popped seed ends on top of the stack
            open_ = deque(reversed(entries))
        workers.append(Worker(wid, policy, open_, peak_open=len(open_), tie=itertools.count(len(entries))))
    pool = WorkerPoolState(
        workers,
        dup_store=KeyStore(seeded.seen) if dup_detect else None,
        sync_threshold=sync_threshold,
        record_reads=record,
    )
    target = _pastar_worker if policy is StealPolicy.HEAD else _pdfs_worker

    def run(me: Worker, rng: random.Random) -> None:
        try:
            target(pool, me, space, rng, deadline, limits.max_open)
        except _Abort:
            pass
        except BaseException as exc:  # surfaced by the caller
            pool.errors.append(exc)
            pool.stop.set()

    ts = [
        threading.Thread(target=run, args=(w, random.Random(seed * 1_000_003 + w.wid)), daemon=True)
        for w in workers
    ]
    for t in ts:
        t.start()
    for t in ts:
        t.join()

    n_seeded = sum(len(e) for e in seeded.per_worker)
    expanded = seeded.expanded + sum(w.examined for w in workers)
    generated = seeded.generated + sum(w.generated for w in workers)
    stats: dict[str, Any] = {
        "threads": threads,
        "solved_during_seeding": False,
        "seeded": n_seeded,
        "seed_expanded": seeded.expanded,
        "worker_generated": sum(w.generated for w in workers),
        "examined": sum(w.examined for w in workers),
        "pruned": sum(w.pruned for w in workers),
        "duplicates": sum(w.duplicates for w in workers),
        "flushed": sum(w.flushed for w in workers),
        "steals": sum(w.steals for w in workers),
        "remaining_open": pool.open_size,
        "incumbent_history": list(pool.best.history),
    }
    if record:
        stats["best_reads"] = [list(w.best_reads) for w in workers]
    counters = dict(
        states_expanded=expanded,
        states_generated=generated + 1,
        peak_open_size=max(seeded.peak_open, sum(w.peak_open for w in workers)),
    )
    if pool.errors:
        err = pool.errors[0]
        if isinstance(err, MemoryBudgetExceeded):
            raise MemoryBudgetExceeded(f"{solver}: {err}", {**counters, **stats})
        raise err
    if pool.stop.is_set():
        raise SearchTimeout(f"{solver}: timed out", {**counters, **stats, "incumbent": pool.best.state and pool.best.f})
    if pool.best.state is None:
        raise RuntimeError("parallel search ended without a complete schedule")
    sched = space.schedule(pool.best.state)
    return SearchResult(
        schedule=sched,
        makespan=makespan(sched, space.graph),
        wall_time=time.perf_counter() - started,
        solver=solver,
        stats=stats,
        **counters,
    )


def pastar(
    space: StateSpace,
    threads: int,
    dup_detect: bool = False,
    limits: Limits = Limits(),
    sync_threshold: int = DEFAULT_SYNC_THRESHOLD,
    seed: int = 0,
    seed_factor: int = DEFAULT_SEED_FACTOR,
    record: bool = False,
) -> SearchResult:
    """Parallel A* with per-worker heaps; ``dup_detect`` gives PA*-DD."""
    name = ("pastar-dd-" if dup_detect else "pastar-") + space.name
    return _run_pool(space, threads, StealPolicy.HEAD, dup_detect, limits, sync_threshold, seed, seed_factor, record, name)


def pdfs(
    space: StateSpace,
    threads: int,
    limits: Limits = Limits(),
    sync_threshold: int = DEFAULT_SYNC_THRESHOLD,
    seed: int = 0,
    seed_factor: int = DEFAULT_SEED_FACTOR,
    record: bool = False,
) -> SearchResult:
    """Parallel depth-first branch-and-bound with per-worker stacks."""
    return _run_pool(
        space, threads, StealPolicy.TAIL, False, limits, sync_threshold, seed, seed_factor, record, f"pdfs-{space.name}"
    )
