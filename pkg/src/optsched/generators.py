"""Seeded benchmark task graph generators.

Task weights and raw edge weights are drawn uniformly from ``[1, 10]`` with
``random.Random(seed)``. Edge weights are then apportioned so the graph hits
the requested communication-to-computation ratio within 10%.
"""

from __future__ import annotations

import enum
import random
from fractions import Fraction

from .taskgraph import TaskGraph, ccr

WEIGHT_LOW = 1
WEIGHT_HIGH = 10
CCR_TOLERANCE = Fraction(1, 10)


class Structure(str, enum.Enum):
    INDEPENDENT = "Independent"
    FORK = "Fork"
    JOIN = "Join"
    FORK_JOIN = "ForkJoin"
    OUT_TREE = "OutTree"
    IN_TREE = "InTree"
    PIPELINE = "Pipeline"
    RANDOM = "Random"
    SERIES_PARALLEL = "SeriesParallel"

    @classmethod
    def parse(cls, name: str | Structure) -> Structure:
        if isinstance(name, Structure):
            return name
        key = name.replace("-", "").replace("_", "").lower()
        for s in cls:
            if s.value.lower() == key:
                return s
        raise ValueError(f"unknown structure {name!r}")


MIN_TASKS = {
    Structure.INDEPENDENT: 1,
    Structure.FORK: 2,
    Structure.JOIN: 2,
    Structure.FORK_JOIN: 3,
    Structure.OUT_TREE: 1,
    Structure.IN_TREE: 1,
    Structure.PIPELINE: 1,
    Structure.RANDOM: 1,
    Structure.SERIES_PARALLEL: 1,
}


class GeneratorError(ValueError):
    pass


def _tree_parents(n: int, rng: random.Random) -> list[int]:
    # random recursive tree: node i hangs off a uniformly chosen earlier node
    return [rng.randrange(i) for i in range(1, n)]


def _series_parallel(n: int, rng: random.Random, top: bool) -> list[tuple[int, int]]:
    """Edges over local ids ``0..n-1`` of a random series-parallel DAG.

    The outermost composition is always in series so the graph is connected.
    """
    if n == 1:
        return []
    k = rng.randint(1, n - 1)
    left = _series_parallel(k, rng, False)
    right = [(a + k, b + k) for a, b in _series_parallel(n - k, rng, False)]
    edges = left + right
    if top or rng.random() < 0.5:
        sinks = set(range(k)) - {a for a, _ in left}
        sources = set(range(k, n)) - {b for _, b in right}
        edges += [(a, b) for a in sorted(sinks) for b in sorted(sources)]
    return edges


def _shape(structure: Structure, n: int, rng: random.Random) -> list[tuple[int, int]]:
    if structure is Structure.INDEPENDENT:
        return []
    if structure is Structure.FORK:
        return [(0, i) for i in range(1, n)]
    if structure is Structure.JOIN:
        return [(i, n - 1) for i in range(n - 1)]
    if structure is Structure.FORK_JOIN:
        mids = range(1, n - 1)
        return [(0, i) for i in mids] + [(i, n - 1) for i in mids]
    if structure is Structure.OUT_TREE:
        return [(p, i) for i, p in enumerate(_tree_parents(n, rng), start=1)]
    if structure is Structure.IN_TREE:
        # mirror of an out-tree: node i feeds one later node
        return [(n - 1 - i, n - 1 - p) for i, p in enumerate(_tree_parents(n, rng), start=1)]
    if structure is Structure.PIPELINE:
        return [(i, i + 1) for i in range(n - 1)]
    if structure is Structure.RANDOM:
        perm = list(range(n))
        rng.shuffle(perm)
        prob = min(1.0, 4.0 / (n - 1)) if n > 1 else 0.0
        edges = [
            (perm[i], perm[j])
            for i in range(n)
            for j in range(i + 1, n)
            if rng.random() < prob
        ]
        if not edges and n > 1:
            edges = [(perm[0], perm[1])]
        return edges
    if structure is Structure.SERIES_PARALLEL:
        return _series_parallel(n, rng, True)
    raise AssertionError(structure)


def _within(c_total: int, w_total: int, target: Fraction) -> bool:
    return abs(Fraction(c_total, w_total) - target) <= CCR_TOLERANCE * target


def _fit_work(weights: list[int], target: Fraction, rng: random.Random) -> int:
    """Nudge task weights by the smallest total amount so that some integer
    edge total lands within tolerance of ``target``; return that total."""
    n = len(weights)
    w_total = sum(weights)
    deltas = range(n * WEIGHT_LOW - w_total, n * WEIGHT_HIGH - w_total + 1)
    for delta in sorted(deltas, key=lambda d: (abs(d), d)):
        w = w_total + delta
        c = max(1, round(target * w))
        if _within(c, w, target):
            break
    else:
        raise GeneratorError(f"cannot reach ccr {target} with {n} tasks")
    step = 1 if delta > 0 else -1
    idx = list(range(n))
    rng.shuffle(idx)
    while delta:
        for t in idx:
            if delta and WEIGHT_LOW <= weights[t] + step <= WEIGHT_HIGH:
                weights[t] += step
                delta -= step
    return c


def _apportion(total: int, raw: list[int]) -> list[int]:
    """Largest-remainder split of ``total`` proportional to ``raw``."""
    denom = sum(raw)
    shares = [total * r // denom for r in raw]
    rem = sorted(range(len(raw)), key=lambda i: (-(total * raw[i] % denom), i))
    for i in rem[: total - sum(shares)]:
        shares[i] += 1
    return shares


def generate(structure: Structure | str, n: int, target_ccr: float | Fraction, seed: int) -> TaskGraph:
    """Build a graph of the named topology with ``n`` tasks."""
    structure = Structure.parse(structure)
    target = Fraction(target_ccr).limit_denominator(10_000)
    if n < MIN_TASKS[structure]:
        raise GeneratorError(f"{structure.value} needs at least {MIN_TASKS[structure]} tasks, got {n}")
    if target < 0:
        raise GeneratorError("target_ccr must be non-negative")
    rng = random.Random(seed)
    pairs = _shape(structure, n, rng)
    weights = [rng.randint(WEIGHT_LOW, WEIGHT_HIGH) for _ in range(n)]
    raw = [rng.randint(WEIGHT_LOW, WEIGHT_HIGH) for _ in pairs]
    if not pairs:
        if target > 0:
            raise GeneratorError(f"{structure.value} with {n} tasks has no edges; ccr must be 0")
        return TaskGraph(tuple(weights), ())
    if target == 0:
        comms = [0] * len(pairs)
    else:
        c_total = round(target * sum(weights))
        if c_total < 1 or not _within(c_total, sum(weights), target):
            c_total = _fit_work(weights, target, rng)
        comms = _apportion(c_total, raw)
    edges = tuple((a, b, c) for (a, b), c in zip(pairs, comms))
    return TaskGraph(tuple(weights), edges)


def ccr_ok(g: TaskGraph, target_ccr: float | Fraction) -> bool:
    target = Fraction(target_ccr).limit_denominator(10_000)
    actual = ccr(g)
    if target == 0:
        return actual == 0
    return abs(actual - target) <= CCR_TOLERANCE * target


__all__ = ["Structure", "GeneratorError", "generate", "ccr_ok", "MIN_TASKS"]
