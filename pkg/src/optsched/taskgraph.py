"""Task graph model, `.tg` text format and graph utilities."""

from __future__ import annotations

import heapq
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property


class TaskGraphError(ValueError):
    """Base class for malformed task graphs."""


class ParseError(TaskGraphError):
    """Syntax or semantic error in a `.tg` document."""

    def __init__(self, message: str, lineno: int | None = None) -> None:
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class CycleError(TaskGraphError):
    """The edge set contains a directed cycle."""

    def __init__(self, message: str = "cycle detected") -> None:
        super().__init__(message)


@dataclass(frozen=True)
class SystemSpec:
    """A set of identical processors with contention-free links."""

    num_procs: int

    def __post_init__(self) -> None:
        if not isinstance(self.num_procs, int) or self.num_procs < 1:
            raise ValueError(f"num_procs must be a positive integer, got {self.num_procs!r}")


@dataclass(frozen=True, eq=False)
class TaskGraph:
    """Immutable weighted DAG.

    Tasks are the dense ids ``0..n-1``. ``order`` is the canonical task order
    (declaration order when parsed), which fixes the allocation order of the
    AO state space.
    """

    weights: tuple[int, ...]
    edges: tuple[tuple[int, int, int], ...]
    order: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        n = len(self.weights)
        for t, w in enumerate(self.weights):
            if not isinstance(w, int) or w < 1:
                raise TaskGraphError(f"task {t} has non-positive weight {w!r}")
        seen: set[tuple[int, int]] = set()
        for src, dst, comm in self.edges:
            for t in (src, dst):
                if not 0 <= t < n:
                    raise TaskGraphError(f"unknown task id {t}")
            if not isinstance(comm, int) or comm < 0:
                raise TaskGraphError(f"edge {src}->{dst} has negative weight {comm!r}")
            if (src, dst) in seen:
                raise TaskGraphError(f"duplicate edge {src}->{dst}")
            seen.add((src, dst))
        object.__setattr__(self, "edges", tuple(sorted(self.edges)))
        if not self.order:
            object.__setattr__(self, "order", tuple(range(n)))
        elif sorted(self.order) != list(range(n)):
            raise TaskGraphError("task order must be a permutation of the task ids")
        # raises CycleError
        topological_order(self)

    @classmethod
    def build(
        cls,
        weights: Sequence[int],
        edges: Iterable[tuple[int, int, int]] = (),
        order: Sequence[int] | None = None,
    ) -> TaskGraph:
        return cls(tuple(weights), tuple(tuple(e) for e in edges), tuple(order or ()))

    @property
    def num_tasks(self) -> int:
        return len(self.weights)

    @property
    def tasks(self) -> range:
        return range(len(self.weights))

    @cached_property
    def parents(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """``parents[v]`` is a tuple of ``(u, c(u, v))``."""
        acc: list[list[tuple[int, int]]] = [[] for _ in self.weights]
        for src, dst, comm in self.edges:
            acc[dst].append((src, comm))
        return tuple(tuple(a) for a in acc)

    @cached_property
    def children(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """``children[u]`` is a tuple of ``(v, c(u, v))``."""
        acc: list[list[tuple[int, int]]] = [[] for _ in self.weights]
        for src, dst, comm in self.edges:
            acc[src].append((dst, comm))
        return tuple(tuple(a) for a in acc)

    @cached_property
    def comm(self) -> dict[tuple[int, int], int]:
        return {(src, dst): c for src, dst, c in self.edges}

    @cached_property
    def topo(self) -> tuple[int, ...]:
        return tuple(topological_order(self))

    @cached_property
    def ancestor_masks(self) -> tuple[int, ...]:
        """Bitmask of all (transitive) ancestors of each task."""
        masks = [0] * self.num_tasks
        for v in self.topo:
            m = 0
            for u, _ in self.parents[v]:
                m |= masks[u] | (1 << u)
            masks[v] = m
        return tuple(masks)

    @cached_property
    def parent_masks(self) -> tuple[int, ...]:
        masks = []
        for ps in self.parents:
            m = 0
            for u, _ in ps:
                m |= 1 << u
            masks.append(m)
        return tuple(masks)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TaskGraph):
            return NotImplemented
        return (self.weights, self.edges, self.order) == (other.weights, other.edges, other.order)

    def __hash__(self) -> int:
        return hash((self.weights, self.edges, self.order))

    def __repr__(self) -> str:
        return f"TaskGraph(n={self.num_tasks}, edges={len(self.edges)})"


def topological_order(g: TaskGraph) -> list[int]:
    """Kahn's algorithm; ties go to the smallest task id."""
    n = len(g.weights)
    indeg = [0] * n
    succ: list[list[int]] = [[] for _ in range(n)]
    for src, dst, _ in g.edges:
        indeg[dst] += 1
        succ[src].append(dst)
    ready = [t for t in range(n) if indeg[t] == 0]
    heapq.heapify(ready)
    out: list[int] = []
    while ready:
        u = heapq.heappop(ready)
        out.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(ready, v)
    if len(out) != n:
        raise CycleError()
    return out


def ccr(g: TaskGraph) -> Fraction:
    """Total edge weight over total task weight."""
    if g.num_tasks == 0:
        raise TaskGraphError("ccr is undefined for an empty graph")
    return Fraction(sum(c for _, _, c in g.edges), sum(g.weights))


def parse_task_graph(text: str) -> TaskGraph:
    """Parse a `.tg` document.

    Records are ``T <id> <weight>`` and ``E <src> <dst> <weight>``; blank
    lines and lines starting with ``#`` are ignored.
    """
    weights: dict[int, int] = {}
    order: list[int] = []
    edges: list[tuple[int, int, int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        kind, args = parts[0], parts[1:]
        try:
            nums = [int(a) for a in args]
        except ValueError:
            raise ParseError(f"expected integers, got {' '.join(args)!r}", lineno) from None
        if kind == "T":
            if len(nums) != 2:
                raise ParseError("task record needs 'T <id> <weight>'", lineno)
            tid, w = nums
            if tid < 0:
                raise ParseError(f"negative task id {tid}", lineno)
            if tid in weights:
                raise ParseError(f"duplicate task id {tid}", lineno)
            if w < 1:
                raise ParseError(f"task {tid} has non-positive weight {w}", lineno)
            weights[tid] = w
            order.append(tid)
        elif kind == "E":
            if len(nums) != 3:
                raise ParseError("edge record needs 'E <src> <dst> <weight>'", lineno)
            src, dst, c = nums
            if c < 0:
                raise ParseError(f"edge {src}->{dst} has negative weight {c}", lineno)
            edges.append((src, dst, c, lineno))
        else:
            raise ParseError(f"unknown record type {kind!r}", lineno)

    n = len(weights)
    missing = sorted(set(range(n)) - set(weights))
    if missing:
        raise ParseError(f"task ids must be dense from 0; missing {missing[0]}")
    seen: set[tuple[int, int]] = set()
    for src, dst, _, lineno in edges:
        for t in (src, dst):
            if t not in weights:
                raise ParseError(f"unknown task id {t}", lineno)
        if (src, dst) in seen:
            raise ParseError(f"duplicate edge {src}->{dst}", lineno)
        if src == dst:
            raise CycleError(f"line {lineno}: cycle detected (self-loop on task {src})")
        seen.add((src, dst))
    return TaskGraph(
        tuple(weights[t] for t in range(n)),
        tuple((s, d, c) for s, d, c, _ in edges),
        tuple(order),
    )


def serialize_task_graph(g: TaskGraph) -> str:
    """Emit tasks in ascending id order, then edges lexicographically."""
    lines = [f"T {t} {w}" for t, w in enumerate(g.weights)]
    lines.extend(f"E {s} {d} {c}" for s, d, c in g.edges)
    return "\n".join(lines) + "\n"


def read_task_graph(path) -> TaskGraph:
    with open(path, encoding="utf-8") as fh:
        return parse_task_graph(fh.read())
