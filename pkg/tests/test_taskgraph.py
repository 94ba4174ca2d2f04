from fractions import Fraction

import pytest
from conftest import dags
from hypothesis import given, settings
from hypothesis import strategies as st

from optsched.generators import MIN_TASKS, GeneratorError, Structure, ccr_ok, generate
from optsched.taskgraph import (
    CycleError,
    ParseError,
    SystemSpec,
    TaskGraph,
    TaskGraphError,
    ccr,
    parse_task_graph,
    read_task_graph,
    serialize_task_graph,
    topological_order,
)


class TestParse:
    def test_two_tasks_one_edge(self):
        g = parse_task_graph("T 0 2\nT 1 3\nE 0 1 1")
        assert g.num_tasks == 2
        assert g.weights == (2, 3)
        assert g.edges == ((0, 1, 1),)
        assert g.comm[(0, 1)] == 1

    def test_self_loop_is_cycle(self):
        with pytest.raises(CycleError, match="cycle"):
            parse_task_graph("T 0 1\nE 0 0 1")

    def test_unknown_task(self):
        with pytest.raises(ParseError, match="unknown task id 1"):
            parse_task_graph("T 0 2\nE 0 1 1")

    def test_cycle(self):
        with pytest.raises(CycleError):
            parse_task_graph("T 0 1\nT 1 1\nE 0 1 0\nE 1 0 0")

    @pytest.mark.parametrize(
        "text, fragment",
        [
            ("T 0 1\nT 0 2", "duplicate task id 0"),
            ("T 0 1\nT 1 1\nE 0 1 1\nE 0 1 2", "duplicate edge"),
            ("T 0 0", "non-positive weight"),
            ("T 0 1\nT 1 1\nE 0 1 -1", "negative weight"),
            ("T 0 x", "expected integers"),
            ("X 0 1", "unknown record type"),
            ("T 0", "T <id> <weight>"),
            ("T 0 1\nT 2 1", "dense"),
        ],
    )
    def test_errors(self, text, fragment):
        with pytest.raises(ParseError, match=fragment):
            parse_task_graph(text)

    def test_error_reports_line_number(self):
        with pytest.raises(ParseError) as exc:
            parse_task_graph("# header\nT 0 1\n\nT 0 2\n")
        assert exc.value.lineno == 4
        assert str(exc.value).startswith("line 4:")

    def test_comments_and_declaration_order(self):
        g = parse_task_graph("# x\nT 1 4\nT 0 2\n  # indented comment\nE 0 1 3\n")
        assert g.weights == (2, 4)
        assert g.order == (1, 0)

    def test_read_from_file(self, tmp_path):
        p = tmp_path / "g.tg"
        p.write_text("T 0 5\n")
        assert read_task_graph(p).weights == (5,)


class TestTopologicalOrder:
    def test_diamond(self, diamond):
        assert topological_order(diamond) == [0, 1, 2, 3]

    def test_independent_ties_by_id(self):
        assert topological_order(TaskGraph.build([1, 1, 1])) == [0, 1, 2]

    def test_chain_forced(self):
        g = TaskGraph.build([1, 1, 1], [(2, 1, 0), (1, 0, 0)])
        assert topological_order(g) == [2, 1, 0]

    def test_constructor_rejects_cycle(self):
        with pytest.raises(CycleError):
            TaskGraph.build([1, 1, 1], [(0, 1, 0), (1, 2, 0), (2, 0, 0)])

    @given(dags(max_tasks=9))
    def test_permutation_respecting_edges(self, g):
        order = topological_order(g)
        assert sorted(order) == list(g.tasks)
        pos = {t: i for i, t in enumerate(order)}
        assert all(pos[u] < pos[v] for u, v, _ in g.edges)


class TestGraphModel:
    def test_ccr_examples(self, diamond):
        assert ccr(TaskGraph.build([2, 3], [(0, 1, 5)])) == 1
        assert ccr(TaskGraph.build([2, 3])) == 0
        assert ccr(diamond) == Fraction(6, 9)

    def test_adjacency_matches_edges(self, diamond):
        assert diamond.parents[3] == ((1, 2), (2, 2))
        assert diamond.children[0] == ((1, 1), (2, 1))
        assert diamond.ancestor_masks[3] == 0b0111
        assert diamond.parent_masks[3] == 0b0110

    def test_invalid_construction(self):
        with pytest.raises(TaskGraphError):
            TaskGraph.build([0])
        with pytest.raises(TaskGraphError):
            TaskGraph.build([1], [(0, 1, 1)])
        with pytest.raises(ValueError):
            SystemSpec(0)

    @given(dags())
    def test_adjacency_consistent(self, g):
        from_parents = sorted((u, v, c) for v in g.tasks for u, c in g.parents[v])
        from_children = sorted((u, v, c) for u in g.tasks for v, c in g.children[u])
        assert from_parents == from_children == list(g.edges)


class TestGenerators:
    def test_fork_shape(self):
        g = generate(Structure.FORK, 4, 1.0, 0)
        assert len(g.edges) == 3
        assert {u for u, _, _ in g.edges} == {0}

    def test_independent(self):
        g = generate(Structure.INDEPENDENT, 5, 0, 7)
        assert g.num_tasks == 5 and g.edges == ()

    def test_random_ccr_in_tolerance(self):
        g = generate(Structure.RANDOM, 16, 1.0, 42)
        assert Fraction(9, 10) <= ccr(g) <= Fraction(11, 10)

    def test_independent_with_communication_rejected(self):
        with pytest.raises(GeneratorError, match="no edges"):
            generate(Structure.INDEPENDENT, 4, 1.0, 0)

    @pytest.mark.parametrize("structure", list(MIN_TASKS))
    def test_too_small(self, structure):
        with pytest.raises(GeneratorError):
            generate(structure, MIN_TASKS[structure] - 1, 1.0, 0)

    def test_shapes(self):
        n = 9
        join = generate(Structure.JOIN, n, 1, 3)
        assert {v for _, v, _ in join.edges} == {n - 1} and len(join.edges) == n - 1
        fj = generate(Structure.FORK_JOIN, n, 1, 3)
        assert len(fj.edges) == 2 * (n - 2)
        pipe = generate(Structure.PIPELINE, n, 1, 3)
        assert pipe.edges == tuple((i, i + 1, c) for i, (_, _, c) in enumerate(pipe.edges))
        for tree, side in ((Structure.OUT_TREE, 1), (Structure.IN_TREE, 0)):
            g = generate(tree, n, 1, 3)
            assert len(g.edges) == n - 1
            # every task has at most one parent (out-tree) or one child (in-tree)
            ends = [e[side] for e in g.edges]
            assert len(set(ends)) == len(ends)

    def test_parse_by_name(self):
        assert Structure.parse("fork-join") is Structure.FORK_JOIN
        assert Structure.parse("SERIES_PARALLEL") is Structure.SERIES_PARALLEL
        with pytest.raises(ValueError):
            Structure.parse("star")

    @settings(max_examples=60)
    @given(
        st.sampled_from([s for s in Structure if s is not Structure.INDEPENDENT]),
        st.integers(3, 30),
        st.sampled_from([0.1, 1.0, 10.0]),
        st.integers(0, 10_000),
    )
    def test_round_trip_reproducible_and_ccr(self, structure, n, target, seed):
        g = generate(structure, n, target, seed)
        assert g.num_tasks == n
        assert parse_task_graph(serialize_task_graph(g)) == g
        assert generate(structure, n, target, seed) == g
        assert ccr_ok(g, target)
        assert all(1 <= w <= 10 for w in g.weights)
