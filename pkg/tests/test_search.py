import pytest
from conftest import dags
from hypothesis import given, settings
from hypothesis import strategies as st
from oracle import brute_force_graph

from optsched.generators import generate
from optsched.schedule import is_valid, makespan
from optsched.search import Limits, MemoryBudgetExceeded, SearchTimeout, astar, dfbnb
from optsched.space import make_space
from optsched.taskgraph import SystemSpec, TaskGraph

P2 = SystemSpec(2)
MODELS = ["ao", "els"]


@pytest.mark.parametrize("model", MODELS)
class TestAstar:
    def test_single_task(self, model):
        trace = []
        r = astar(make_space(model, TaskGraph.build([4]), P2), trace=trace)
        assert r.makespan == 4
        assert trace[-1] == 4

    def test_diamond(self, model, diamond):
        r = astar(make_space(model, diamond, P2))
        assert r.makespan == 8
        assert is_valid(r.schedule, diamond, P2)
        assert makespan(r.schedule, diamond) == r.makespan

    def test_independent_packing(self, model):
        assert astar(make_space(model, TaskGraph.build([2, 2, 2]), P2)).makespan == 4

    def test_pops_in_nondecreasing_f(self, model):
        g = generate("random", 7, 1.0, 5)
        trace = []
        astar(make_space(model, g, SystemSpec(3)), trace=trace)
        assert trace == sorted(trace)

    def test_duplicate_detection(self, model):
        g = generate("join", 6, 1.0, 2)
        space = make_space(model, g, P2)
        plain, dd = astar(space), astar(space, dup_detect=True)
        assert plain.makespan == dd.makespan
        if model == "ao":
            # the allocation-ordering space has no duplicates to drop
            assert dd.stats["duplicates"] == 0
            assert dd.states_expanded == plain.states_expanded
        else:
            assert dd.stats["duplicates"] > 0

    def test_memory_budget(self, model):
        g = generate("independent", 8, 0, 1)
        with pytest.raises(MemoryBudgetExceeded) as exc:
            astar(make_space(model, g, SystemSpec(3)), Limits(max_open=5))
        assert exc.value.stats["peak_open_size"] > 5


@pytest.mark.parametrize("model", MODELS)
class TestDfbnb:
    def test_zero_comm_chain(self, model):
        g = TaskGraph.build([1, 1, 1], [(0, 1, 0), (1, 2, 0)])
        assert dfbnb(make_space(model, g, P2)).makespan == 3

    def test_diamond_matches_astar(self, model, diamond):
        space = make_space(model, diamond, P2)
        assert dfbnb(space).makespan == astar(space).makespan == 8

    def test_fork(self, model):
        g = TaskGraph.build([2, 3, 3], [(0, 1, 1), (0, 2, 1)])
        r = dfbnb(make_space(model, g, P2))
        assert r.makespan == 6
        assert is_valid(r.schedule, g, P2)

    def test_linear_space(self, model):
        g = generate("series-parallel", 8, 1.0, 4)
        r = dfbnb(make_space(model, g, SystemSpec(3)))
        assert r.peak_open_size <= r.max_branching * r.max_depth


def test_timeout_reports_counters():
    g = generate("random", 30, 1.0, 3)
    with pytest.raises(SearchTimeout) as exc:
        astar(make_space("els", g, SystemSpec(4)), Limits(timeout=0.001))
    assert exc.value.stats["states_expanded"] > 0
    with pytest.raises(SearchTimeout):
        dfbnb(make_space("ao", g, SystemSpec(4)), Limits(timeout=0.001))


def test_empty_graph():
    g = TaskGraph.build([])
    for model in MODELS:
        assert astar(make_space(model, g, P2)).makespan == 0
        assert dfbnb(make_space(model, g, P2)).makespan == 0


@settings(max_examples=150, deadline=None)
@given(dags(max_tasks=6), st.integers(1, 3))
def test_all_sequential_solvers_optimal(g, procs):
    opt = brute_force_graph(g, procs)
    sys = SystemSpec(procs)
    for model in MODELS:
        space = make_space(model, g, sys)
        for r in (astar(space), astar(space, dup_detect=True), dfbnb(space)):
            assert r.makespan == opt
            assert is_valid(r.schedule, g, sys)
            assert r.peak_open_size >= 1
