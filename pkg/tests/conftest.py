import math

import pytest
from hypothesis import strategies as st

from optsched.taskgraph import SystemSpec, TaskGraph


@pytest.fixture
def diamond() -> TaskGraph:
    # a=0, b=1, c=2, d=3
    return TaskGraph.build([2, 3, 3, 1], [(0, 1, 1), (0, 2, 1), (1, 3, 2), (2, 3, 2)])


@pytest.fixture
def two_procs() -> SystemSpec:
    return SystemSpec(2)


def stirling2(n: int, k: int) -> int:
    """Ways to partition ``n`` labelled items into ``k`` non-empty blocks."""
    return sum((-1) ** i * math.comb(k, i) * (k - i) ** n for i in range(k + 1)) // math.factorial(k)


@st.composite
def dags(draw, min_tasks=1, max_tasks=6, max_weight=10, max_comm=10):
    """Small random DAGs with task ids relabelled so id order is not topological."""
    n = draw(st.integers(min_tasks, max_tasks))
    weights = draw(st.lists(st.integers(1, max_weight), min_size=n, max_size=n))
    perm = draw(st.permutations(range(n)))
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if draw(st.booleans()):
                edges.append((perm[i], perm[j], draw(st.integers(0, max_comm))))
    return TaskGraph.build(weights, edges)


_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record one criterion's outcome; the lines are printed in the terminal summary."""

    def record(name: str, ok: bool, detail: str) -> bool:
        _VERDICTS.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
