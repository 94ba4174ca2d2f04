"""The frozen optima are what the brute-force oracle computes, and the
oracle agrees with hand-checked instances."""

import pytest
from corpus import corpus, digest, frozen_optima
from oracle import brute_force, brute_force_graph

from optsched.taskgraph import TaskGraph


def test_hand_checked_instances(diamond):
    assert brute_force_graph(diamond, 2) == 8
    assert brute_force_graph(TaskGraph.build([2, 2, 2]), 2) == 4
    assert brute_force_graph(TaskGraph.build([2, 3, 3], [(0, 1, 1), (0, 2, 1)]), 2) == 6
    # join with expensive messages: everything on one processor wins
    assert brute_force_graph(TaskGraph.build([1, 1, 1], [(0, 2, 10), (1, 2, 10)]), 2) == 3
    assert brute_force([], [], 2)[0] == 0


def test_oracle_witness_is_a_valid_schedule(diamond):
    from optsched.schedule import Schedule, is_valid, makespan
    from optsched.taskgraph import SystemSpec

    mk, (proc, start) = brute_force(list(diamond.weights), list(diamond.edges), 2)
    s = Schedule({t: (proc[t], start[t]) for t in diamond.tasks})
    assert is_valid(s, diamond, SystemSpec(2))
    assert makespan(s, diamond) == mk


def test_frozen_file_covers_corpus():
    frozen = frozen_optima()
    ids = [iid for iid, _, _ in corpus()]
    assert len(ids) == 250
    assert sorted(ids) == sorted(frozen)


@pytest.mark.parametrize("iid, g, system", list(corpus()), ids=lambda v: v if isinstance(v, str) else "")
def test_frozen_optimum(iid, g, system):
    entry = frozen_optima()[iid]
    # the generator still produces the frozen graph
    assert digest(g) == entry["graph"]
    assert brute_force_graph(g, system.num_procs) == entry["makespan"]
