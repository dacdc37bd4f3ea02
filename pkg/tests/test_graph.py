import itertools
from fractions import Fraction

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rankwitness.errors import CycleDetected, DuplicateName, InvalidPath, InvalidQuery, UnknownVariable
from rankwitness.graph import (
    SeparationQuery,
    build_graph,
    d_separated,
    d_separated_by_paths,
    find_hidden_separators,
    graph_from_dict,
    graph_to_dict,
    iter_paths,
    markov_joint,
    path_is_blocked,
    random_cpts,
    separator_cardinality,
    to_dot,
)

from conftest import common_cause_graph, exact_ci, random_dag

COMMON_CAUSE = [("X", 3, True), ("Y", 3, True), ("Z", 4, False)], [("Z", "X"), ("Z", "Y")]
TWO_HIDDEN = ([("X", 3, True), ("Y", 3, True), ("Z1", 2, False), ("Z2", 3, False)],
         [("Z1", "X"), ("Z1", "Y"), ("X", "Z2"), ("Z2", "Y")])


def q(x, y, z=()):
    return SeparationQuery.of(x, y, z)


class TestBuild:
    def test_common_cause_graph(self):
        g = build_graph(*COMMON_CAUSE)
        assert g.names == ("X", "Y", "Z")
        assert g.parents("X") == ("Z",)
        assert g.hidden == ("Z",)

    def test_self_loop(self):
        with pytest.raises(CycleDetected):
            build_graph([("X", 2)], [("X", "X")])

    def test_two_cycle(self):
        with pytest.raises(CycleDetected):
            build_graph([("X", 2), ("Y", 2)], [("X", "Y"), ("Y", "X")])

    def test_long_cycle(self):
        with pytest.raises(CycleDetected):
            build_graph([("A", 2), ("B", 2), ("C", 2)], [("A", "B"), ("B", "C"), ("C", "A")])

    def test_unknown_and_duplicate(self):
        with pytest.raises(UnknownVariable):
            build_graph([("X", 2)], [("X", "Y")])
        with pytest.raises(DuplicateName):
            build_graph([("X", 2), ("X", 3)], [])

    def test_bad_cardinality(self):
        with pytest.raises(ValueError):
            build_graph([("X", 0)], [])

    def test_json_round_trip(self):
        g = build_graph(*TWO_HIDDEN)
        assert graph_from_dict(graph_to_dict(g)) == g

    def test_dot_styles(self):
        dot = to_dot(build_graph(*COMMON_CAUSE))
        assert '"Z" [shape=ellipse, style=dashed' in dot
        assert '"X" [shape=ellipse, style=solid' in dot
        assert '"Z" -> "X";' in dot


class TestBlocking:
    def test_fork_blocked(self):
        g = build_graph(*COMMON_CAUSE)
        assert path_is_blocked(g, ["X", "Z", "Y"], {"Z"})
        assert not path_is_blocked(g, ["X", "Z", "Y"], set())

    def test_collider(self):
        g = build_graph([("X", 2), ("Y", 2), ("Z", 2), ("W", 2)], [("X", "Z"), ("Y", "Z"), ("Z", "W")])
        assert path_is_blocked(g, ["X", "Z", "Y"], set())
        assert not path_is_blocked(g, ["X", "Z", "Y"], {"Z"})
        # conditioning on a descendant of the collider also opens it
        assert not path_is_blocked(g, ["X", "Z", "Y"], {"W"})

    def test_chain(self):
        g = build_graph([("X", 2), ("M", 2), ("Y", 2)], [("X", "M"), ("M", "Y")])
        assert path_is_blocked(g, ["X", "M", "Y"], {"M"})
        assert not path_is_blocked(g, ["X", "M", "Y"], set())

    def test_invalid_path(self):
        g = build_graph(*COMMON_CAUSE)
        with pytest.raises(InvalidPath):
            path_is_blocked(g, ["X", "Y"], set())

    def test_literal_bullets_on_short_paths(self):
        # re-derive the two blocking conditions independently, per triple
        rng = np.random.default_rng(7)
        for _ in range(30):
            g = random_dag(rng, 6, p=0.5)
            G = nx.DiGraph()
            G.add_nodes_from(g.names)
            G.add_edges_from(g.edges)
            desc = {v: nx.descendants(G, v) for v in g.names}
            for a, b in itertools.combinations(g.names, 2):
                for path in iter_paths(g, a, b):
                    if len(path) > 6:
                        continue
                    for zsize in range(3):
                        for z in itertools.combinations([v for v in g.names if v not in (a, b)], zsize):
                            z = set(z)
                            expect = False
                            for u, m, w in zip(path, path[1:], path[2:]):
                                fork_or_chain = not ((u, m) in g.edges and (w, m) in g.edges)
                                if fork_or_chain and m in z:
                                    expect = True
                                if not fork_or_chain and m not in z and not (desc.get(m, set()) & z):
                                    expect = True
                            assert path_is_blocked(g, path, z) == expect


class TestDSeparation:
    def test_common_cause_graph(self):
        assert d_separated(build_graph(*COMMON_CAUSE), q("X", "Y", "Z"))
        assert not d_separated(build_graph(*COMMON_CAUSE), q("X", "Y"))

    def test_two_hidden_paths(self):
        g = build_graph(*TWO_HIDDEN)
        assert d_separated(g, q("X", "Y", {"Z1", "Z2"}))
        assert not d_separated(g, q("X", "Y", {"Z1"}))
        assert not d_separated(g, q("X", "Y", {"Z2"}))

    def test_direct_edge(self):
        g = common_cause_graph(direct=True)
        assert not d_separated(g, q("X", "Y", "U"))

    def test_query_validation(self):
        g = build_graph(*COMMON_CAUSE)
        with pytest.raises(InvalidQuery):
            d_separated(g, q("X", "X"))
        with pytest.raises(InvalidQuery):
            d_separated(g, q("X", "Y", {"X"}))
        with pytest.raises(UnknownVariable):
            d_separated(g, q("X", "Q"))

    def test_sets(self):
        g = build_graph([("A", 2), ("B", 2), ("C", 2), ("D", 2)], [("A", "C"), ("B", "D")])
        assert d_separated(g, q({"A", "C"}, {"B", "D"}))
        assert not d_separated(g, q({"A"}, {"C", "D"}))

    def test_matches_path_enumeration_up_to_8_vertices(self):
        rng = np.random.default_rng(2024)
        checked = 0
        for trial in range(60):
            n = int(rng.integers(2, 9))
            g = random_dag(rng, n, p=float(rng.uniform(0.2, 0.5)))
            for _ in range(12):
                names = list(rng.permutation(g.names))
                x, y = names[0], names[1]
                z = set(names[2:2 + int(rng.integers(0, max(1, n - 1)))])
                query = q(x, y, z)
                assert d_separated(g, query) == d_separated_by_paths(g, query), (g, query)
                checked += 1
        assert checked == 720

    def test_matches_networkx(self):
        rng = np.random.default_rng(5)
        check = getattr(nx, "is_d_separator", None) or nx.d_separated
        for _ in range(100):
            g = random_dag(rng, 7, p=0.35)
            G = nx.DiGraph()
            G.add_nodes_from(g.names)
            G.add_edges_from(g.edges)
            names = list(rng.permutation(g.names))
            x, y, z = {names[0]}, {names[1], names[2]}, set(names[3:3 + int(rng.integers(0, 4))])
            assert d_separated(g, q(x, y, z)) == check(G, x, y, z)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10_000))
    def test_symmetric(self, seed):
        rng = np.random.default_rng(seed)
        g = random_dag(rng, 6)
        names = list(rng.permutation(g.names))
        z = set(names[2:2 + int(rng.integers(0, 4))])
        assert d_separated(g, q(names[0], names[1], z)) == d_separated(g, q(names[1], names[0], z))

    def test_conditioning_on_open_path_middle_blocks_it(self):
        rng = np.random.default_rng(11)
        for _ in range(40):
            g = random_dag(rng, 6, p=0.5)
            x, y = g.names[0], g.names[1]
            for path in iter_paths(g, x, y):
                triples = list(zip(path, path[1:], path[2:]))
                if not triples or any((a, m) in g.edges and (c, m) in g.edges for a, m, c in triples):
                    continue
                assert not path_is_blocked(g, path, set())
                for _, m, _ in triples:
                    assert path_is_blocked(g, path, {m})


def test_dsep_implies_exact_ci_small():
    # compact version of the 200-DAG acceptance suite
    rng = np.random.default_rng(99)
    for _ in range(20):
        g = random_dag(rng, 5)
        joint = markov_joint(g, random_cpts(g, rng, exact=True))
        assert sum(joint.flat) == 1
        names = list(g.names)
        for x, y in itertools.combinations(names, 2):
            rest = [v for v in names if v not in (x, y)]
            for k in range(len(rest) + 1):
                for z in itertools.combinations(rest, k):
                    if d_separated(g, q(x, y, z)):
                        assert exact_ci(joint, names, [x], [y], list(z))


def test_ci_oracle_detects_dependence():
    g = build_graph(*COMMON_CAUSE)
    joint = markov_joint(g, random_cpts(g, np.random.default_rng(0), exact=True))
    assert not exact_ci(joint, list(g.names), ["X"], ["Y"], [])
    assert exact_ci(joint, list(g.names), ["X"], ["Y"], ["Z"])


class TestSeparators:
    def test_cardinality(self):
        g = build_graph(*TWO_HIDDEN)
        assert separator_cardinality(g, {"Z1", "Z2"}) == 6
        assert separator_cardinality(g, set()) == 1
        assert separator_cardinality(build_graph(*COMMON_CAUSE), {"Z"}) == 4
        with pytest.raises(UnknownVariable):
            separator_cardinality(g, {"Q"})

    def test_common_cause(self):
        assert find_hidden_separators(common_cause_graph(card_u=2), "X", "Y") == [(frozenset({"U"}), 2)]

    def test_direct_edge(self):
        assert find_hidden_separators(common_cause_graph(direct=True), "X", "Y") == []

    def test_given_observed_z(self):
        g = common_cause_graph(card_u=3, observed_z=True)
        assert find_hidden_separators(g, "X", "Y", {"Z"}) == [(frozenset({"U"}), 3)]
        assert find_hidden_separators(g, "X", "Y") == []

    def test_two_hidden_needs_both(self):
        assert find_hidden_separators(build_graph(*TWO_HIDDEN), "X", "Y") == [(frozenset({"Z1", "Z2"}), 6)]

    def test_minimality(self):
        # two alternative hidden routes; each minimal separator listed once
        g = build_graph([("X", 2), ("Y", 2), ("A", 2, False), ("B", 3, False)],
                        [("X", "A"), ("A", "B"), ("B", "Y")])
        seps = find_hidden_separators(g, "X", "Y")
        assert sorted((sorted(s), c) for s, c in seps) == [(["A"], 2), (["B"], 3)]

    def test_hidden_conditioning_rejected(self):
        with pytest.raises(InvalidQuery):
            find_hidden_separators(common_cause_graph(), "X", "Y", {"U"})


def test_markov_joint_float_normalized():
    g = common_cause_graph(observed_z=True)
    joint = markov_joint(g, random_cpts(g, np.random.default_rng(1)))
    assert joint.shape == (3, 3, 2, 2)
    assert joint.sum() == pytest.approx(1.0, abs=1e-12)
