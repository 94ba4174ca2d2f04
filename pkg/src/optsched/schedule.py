"""Schedules: task -> (processor, start time), validity and makespan."""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from types import MappingProxyType

from .taskgraph import SystemSpec, TaskGraph


class IncompleteScheduleError(ValueError):
    """A complete schedule was required."""


class UnassignedParentError(ValueError):
    """earliest_start was asked about a task with an unscheduled parent."""


class Schedule(Mapping[int, tuple[int, int]]):
    """Immutable, possibly partial, mapping ``task -> (proc, start)``."""

    __slots__ = ("_assignment",)

    def __init__(self, assignment: Mapping[int, tuple[int, int]] | None = None) -> None:
        items = {}
        for task, (proc, start) in (assignment or {}).items():
            if proc < 0:
                raise ValueError(f"task {task}: negative processor index {proc}")
            if start < 0:
                raise ValueError(f"task {task}: negative start time {start}")
            items[task] = (proc, start)
        self._assignment = MappingProxyType(items)

    def __getitem__(self, task: int) -> tuple[int, int]:
        return self._assignment[task]

    def __iter__(self) -> Iterator[int]:
        return iter(self._assignment)

    def __len__(self) -> int:
        return len(self._assignment)

    def __repr__(self) -> str:
        body = ", ".join(f"{t}: {self._assignment[t]}" for t in sorted(self._assignment))
        return f"Schedule({{{body}}})"

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Schedule):
            return dict(self._assignment) == dict(other._assignment)
        return NotImplemented

    def __hash__(self) -> int:
        return hash(frozenset(self._assignment.items()))

    def proc(self, task: int) -> int:
        return self._assignment[task][0]

    def start(self, task: int) -> int:
        return self._assignment[task][1]

    def finish(self, task: int, g: TaskGraph) -> int:
        return self._assignment[task][1] + g.weights[task]

    def with_task(self, task: int, proc: int, start: int) -> Schedule:
        merged = dict(self._assignment)
        merged[task] = (proc, start)
        return Schedule(merged)

    def is_complete(self, g: TaskGraph) -> bool:
        return len(self._assignment) == g.num_tasks and all(t in self._assignment for t in g.tasks)

    def proc_sequences(self) -> dict[int, list[int]]:
        """Tasks on each used processor, in start-time order."""
        seqs: dict[int, list[int]] = {}
        for task, (proc, start) in sorted(self._assignment.items(), key=lambda kv: (kv[1][1], kv[0])):
            seqs.setdefault(proc, []).append(task)
        return seqs

    def to_text(self, g: TaskGraph) -> str:
        """``S <task> <proc> <start>`` lines, tasks ascending, then ``M <makespan>``."""
        lines = [f"S {t} {p} {s}" for t, (p, s) in sorted(self._assignment.items())]
        lines.append(f"M {makespan(self, g)}")
        return "\n".join(lines) + "\n"


def parse_schedule(text: str) -> tuple[Schedule, int | None]:
    """Inverse of :meth:`Schedule.to_text`; returns the schedule and the ``M`` value."""
    assignment: dict[int, tuple[int, int]] = {}
    reported = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "S" and len(parts) == 4:
            task, proc, start = map(int, parts[1:])
            if task in assignment:
                raise ValueError(f"line {lineno}: task {task} assigned twice")
            assignment[task] = (proc, start)
        elif parts[0] == "M" and len(parts) == 2:
            reported = int(parts[1])
        else:
            raise ValueError(f"line {lineno}: unrecognised schedule record {raw!r}")
    return Schedule(assignment), reported


def _require_complete(s: Schedule, g: TaskGraph) -> None:
    if not s.is_complete(g):
        missing = [t for t in g.tasks if t not in s]
        raise IncompleteScheduleError(f"schedule does not assign tasks {missing}")


def is_valid(s: Schedule, g: TaskGraph, sys: SystemSpec) -> bool:
    """Check the processor and precedence constraints of a complete schedule."""
    _require_complete(s, g)
    w = g.weights
    for proc, _ in s.values():
        if proc >= sys.num_procs:
            return False
    for tasks in s.proc_sequences().values():
        for a, b in zip(tasks, tasks[1:]):
            if s.start(b) < s.start(a) + w[a]:
                return False
    for u, v, c in g.edges:
        pu, su = s[u]
        pv, sv = s[v]
        ready = su + w[u] + (0 if pu == pv else c)
        if sv < ready:
            return False
    return True


def makespan(s: Schedule, g: TaskGraph) -> int:
    _require_complete(s, g)
    return max((start + g.weights[t] for t, (_, start) in s.items()), default=0)


def earliest_start(partial: Schedule, g: TaskGraph, task: int, proc: int) -> int:
    """Earliest start of ``task`` appended to ``proc`` after its current last task."""
    w = g.weights
    t = max((st + w[u] for u, (p, st) in partial.items() if p == proc), default=0)
    for u, c in g.parents[task]:
        if u not in partial:
            raise UnassignedParentError(f"parent {u} of task {task} is not scheduled")
        pu, su = partial[u]
        t = max(t, su + w[u] + (0 if pu == proc else c))
    return t
