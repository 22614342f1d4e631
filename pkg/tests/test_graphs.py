from __future__ import annotations

import numpy as np
import pytest

from graphjac.graphs import (
    Graph,
    GraphFormatError,
    LengthFunction,
    collapse,
    cycle_basis,
    graph_from_dict,
    parse_document,
    rank,
    separating_edges,
    spanning_tree,
    unit_lengths,
    validate_length_function,
    validate_shape,
)

import oracles


# --- parsing ---------------------------------------------------------------


def test_parse_theta(theta):
    g, lam = theta
    assert g.n_vertices == 2
    assert g.n_edges == 3
    assert g.n_half_edges == 6
    assert g.edge_names == ("a", "b", "c")
    # forward half of edge a points u -> v
    assert g.vertex_names[g.source(0)] == "u"
    assert g.vertex_names[g.target(0)] == "v"


def test_parse_rose2_loops_allowed(rose2):
    g, _ = rose2
    assert g.n_half_edges == 4
    assert g.is_loop(0) and g.is_loop(1)


def test_parse_missing_vertex_errors():
    doc = {"vertices": ["u"], "edges": [{"id": "a", "source": "u", "target": "w"}]}
    with pytest.raises(GraphFormatError):
        graph_from_dict(doc)


def test_parse_duplicate_edge_id_errors():
    doc = {
        "vertices": ["u", "v"],
        "edges": [
            {"id": "a", "source": "u", "target": "v"},
            {"id": "a", "source": "v", "target": "u"},
        ],
    }
    with pytest.raises(GraphFormatError):
        graph_from_dict(doc)


def test_parse_order_independent():
    doc1 = {
        "vertices": ["u", "v"],
        "edges": [
            {"id": "a", "source": "u", "target": "v"},
            {"id": "b", "source": "u", "target": "v"},
        ],
    }
    doc2 = {"vertices": ["v", "u"], "edges": list(reversed(doc1["edges"]))}
    assert graph_from_dict(doc1) == graph_from_dict(doc2)


def test_involution_structure(theta):
    g, _ = theta
    for h in range(g.n_half_edges):
        assert g.mate(g.mate(h)) == h
        assert g.mate(h) != h
        assert g.source(g.mate(h)) == g.target(h)


# --- shape / rank / bridges --------------------------------------------------


def test_validate_shape(theta, rose2):
    g, _ = theta
    assert validate_shape(g, require_gr=True).ok
    assert list(g.valences()) == [3, 3]
    g, _ = rose2
    assert validate_shape(g, require_gr=True).ok
    assert list(g.valences()) == [4]


def test_single_edge_fails_gr():
    doc = {"vertices": ["u", "v"], "edges": [{"id": "a", "source": "u", "target": "v"}]}
    g = graph_from_dict(doc)
    assert not validate_shape(g, require_gr=True).ok
    assert validate_shape(g, require_gr=False).ok


def test_rank(theta, rose2):
    assert rank(theta[0]) == 2
    assert rank(rose2[0]) == 2
    path = graph_from_dict(
        {
            "vertices": ["x", "y", "z"],
            "edges": [
                {"id": "a", "source": "x", "target": "y"},
                {"id": "b", "source": "y", "target": "z"},
            ],
        }
    )
    assert rank(path) == 0


def test_separating_edges(theta, rose2, dumbbell):
    assert separating_edges(theta[0]) == set()
    assert separating_edges(rose2[0]) == set()
    g, _ = dumbbell
    assert {g.edge_names[k] for k in separating_edges(g)} == {"br"}


def test_bridges_match_brute_force_on_random_graphs():
    rng = np.random.default_rng(7)
    for _ in range(60):
        g = oracles.random_connected_graph(rng)
        assert separating_edges(g) == oracles.brute_bridges(g)


# --- length functions ---------------------------------------------------------


def test_validate_length_theta_all_ones(theta):
    g, lam = theta
    report = validate_length_function(g, lam)
    assert report.ok
    assert lam.nondegenerate


def test_validate_length_rejects_short_cycle(theta):
    g, _ = theta
    lam = LengthFunction((0.5, 0.5, 1.0))  # cycle (a, b) has no full-length edge
    assert not validate_length_function(g, lam).ok
    assert not oracles.brute_valid_lengths(g, lam)


def test_validate_length_matches_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(80):
        g = oracles.random_connected_graph(rng, max_vertices=4, extra_edges=3)
        lengths = tuple(float(x) for x in rng.choice([0.0, 0.3, 1.0], size=g.n_edges))
        lam = LengthFunction(lengths)
        assert validate_length_function(g, lam).ok == oracles.brute_valid_lengths(g, lam)


# --- spanning trees / cycle basis ----------------------------------------------


def test_spanning_tree_theta_tie_break(theta):
    g, lam = theta
    t = spanning_tree(g, lam, 0)
    # all three single-edge trees are legal; the tie-break keeps the lowest
    # ids out of the tree so they become the chords
    assert {g.edge_names[k] for k in t.tree_edges} == {"c"}
    assert [g.edge_names[h // 2] for h in t.chords] == ["a", "b"]
    # brute check: every spanning tree of theta is one edge
    assert all(len({k}) == 1 for k in range(3))


def test_spanning_tree_contains_short_edges(dumbbell):
    g, lam = dumbbell
    t = spanning_tree(g, lam, 0)
    br = g.edge_names.index("br")
    assert br in t.tree_edges


def test_spanning_tree_of_tree_graph():
    g = graph_from_dict(
        {
            "vertices": ["x", "y", "z"],
            "edges": [
                {"id": "a", "source": "x", "target": "y"},
                {"id": "b", "source": "y", "target": "z"},
            ],
        }
    )
    t = spanning_tree(g, unit_lengths(g), 0)
    assert len(t.tree_edges) == 2
    assert t.chords == ()


def test_cycle_basis_theta(theta):
    g, lam = theta
    t = spanning_tree(g, lam, 0)
    cycles = cycle_basis(g, t)
    assert [c.half_edges for c in cycles] == [(0, 5), (2, 5)]  # (a, c-bar), (b, c-bar)
    inc = cycles[0].incidence_vector(g.n_edges)
    assert inc[g.edge_names.index("c")] == -1
    assert inc[g.edge_names.index("a")] == 1


def test_cycle_basis_rose2(rose2):
    g, lam = rose2
    t = spanning_tree(g, lam, 0)
    cycles = cycle_basis(g, t)
    assert [c.half_edges for c in cycles] == [(0,), (2,)]


def test_cycle_basis_independent_over_q():
    rng = np.random.default_rng(3)
    for _ in range(30):
        g = oracles.random_connected_graph(rng)
        lam = unit_lengths(g)
        t = spanning_tree(g, lam, 0)
        cycles = cycle_basis(g, t)
        if not cycles:
            continue
        mat = np.array([c.incidence_vector(g.n_edges) for c in cycles], dtype=float)
        assert np.linalg.matrix_rank(mat) == len(cycles)


# --- collapse -------------------------------------------------------------------


def test_collapse_theta_to_rose(theta):
    g, _ = theta
    c = g.edge_names.index("c")
    q, morphism = collapse(g, [c])
    assert q.n_vertices == 1
    assert q.n_edges == 2
    assert q.edge_names == ("a", "b")
    assert all(q.is_loop(k) for k in range(2))
    assert morphism.collapsed_edges == (c,)
    assert rank(q) == rank(g)


def test_collapse_bridge_of_dumbbell(dumbbell):
    g, _ = dumbbell
    br = g.edge_names.index("br")
    q, _ = collapse(g, [br])
    assert q.n_vertices == 1 and q.n_edges == 2
    assert rank(q) == 2


def test_collapse_empty_is_identity(theta):
    g, _ = theta
    q, morphism = collapse(g, [])
    assert q == g
    assert morphism.collapsed_edges == ()


def test_collapse_rejects_cycles(theta, rose2):
    g, _ = theta
    with pytest.raises(ValueError):
        collapse(g, [0, 1])  # a and b form a cycle
    g, _ = rose2
    with pytest.raises(ValueError):
        collapse(g, [0])  # a loop is a cycle


def test_collapse_preserves_rank_random():
    rng = np.random.default_rng(5)
    for _ in range(25):
        g = oracles.random_connected_graph(rng)
        # collapse a random sub-forest of a spanning tree
        t = spanning_tree(g, unit_lengths(g), 0)
        forest = [k for k in t.tree_edges if rng.random() < 0.5]
        q, _ = collapse(g, forest)
        assert rank(q) == rank(g)


def test_parse_document_roundtrip(data_dir):
    g, lam = parse_document((data_dir / "dumbbell.json").read_text())
    assert g.edge_names == ("br", "p", "q")
    assert lam.edge_lengths == (0.4, 1.0, 1.0)
