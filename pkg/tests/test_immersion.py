from __future__ import annotations

import numpy as np
import pytest

from graphjac.graphs import LengthFunction, graph_from_dict, spanning_tree, unit_lengths
from graphjac.immersion import (
    check_local_embedding,
    check_tautness,
    cut_long_edges,
    embed_trees,
    embedded_tree_from_positions,
    glue_translation,
    torus_immersion,
    vertex_potentials,
)
from graphjac.period import canonical_cocycle, good_metric

import oracles


def pipeline(g, lam):
    t = spanning_tree(g, lam, 0)
    omega = canonical_cocycle(g, lam, t)
    metric = good_metric(g, t, omega, lam)
    return t, omega, metric


def test_vertex_potentials_theta(theta):
    g, lam = theta
    t, omega, _ = pipeline(g, lam)
    f = vertex_potentials(g, t, lam, omega, 0)
    u, v = g.vertex_names.index("u"), g.vertex_names.index("v")
    assert np.allclose(f[u], [0.0, 0.0])
    assert np.allclose(f[v], [-1 / 3, -1 / 3])


def test_vertex_potentials_rose2(rose2):
    g, lam = rose2
    t, omega, _ = pipeline(g, lam)
    f = vertex_potentials(g, t, lam, omega, 0)
    assert np.allclose(f, 0.0)


def test_torus_immersion_theta_defects(theta):
    g, lam = theta
    im = torus_immersion(g, lam)
    assert np.allclose(im.closure_defects(), np.eye(2), atol=1e-12)
    # segment of chord a starts at f(u) and is displaced by omega(a)
    seg = im.segments[0]
    assert np.allclose(seg.start + seg.displacement - im.potentials[g.vertex_names.index("v")], [1.0, 0.0])


def test_torus_immersion_rose2(rose2):
    g, lam = rose2
    im = torus_immersion(g, lam)
    assert np.allclose(im.segments[0].displacement, [1.0, 0.0])
    assert np.allclose(im.segments[1].displacement, [0.0, 1.0])


def test_torus_immersion_tree_graph():
    g = graph_from_dict(
        {
            "vertices": ["x", "y"],
            "edges": [{"id": "a", "source": "x", "target": "y", "length": 0.7}],
        }
    )
    im = torus_immersion(g, LengthFunction((0.7,)))
    assert im.rank == 0
    assert im.lattice_raw().shape == (0, 0)


def test_base_point_independence(theta):
    g, lam = theta
    im0 = torus_immersion(g, lam, v0=0)
    im1 = torus_immersion(g, lam, v0=1)
    diff = im0.potentials - im1.potentials
    assert np.allclose(diff - diff[0], 0.0, atol=1e-12)  # constant translation


def test_check_local_embedding(theta, dumbbell):
    g, lam = theta
    assert check_local_embedding(torus_immersion(g, lam)).ok
    g, lam = dumbbell
    report = check_local_embedding(torus_immersion(g, lam))
    assert report.ok  # zero displacement is on a bridge: flagged but allowed
    flagged = [i for i in report.items if i.check == "zero_displacement_bridges"]
    assert flagged[0].location == "br"


def test_cut_theta(theta):
    g, lam = theta
    forest = cut_long_edges(g, lam)
    assert len(forest.trees) == 2
    assert len(forest.glue_pairs) == 3
    assert all(len(t.stubs) == 3 and not t.internal_edges for t in forest.trees)


def test_cut_rose2(rose2):
    g, lam = rose2
    forest = cut_long_edges(g, lam)
    assert len(forest.trees) == 1
    assert len(forest.trees[0].stubs) == 4
    assert len(forest.glue_pairs) == 2


def test_cut_dumbbell_keeps_bridge(dumbbell):
    g, lam = dumbbell
    forest = cut_long_edges(g, lam)
    assert len(forest.trees) == 1
    assert forest.trees[0].internal_edges == (g.edge_names.index("br"),)
    assert len(forest.trees[0].stubs) == 4


def test_cut_invalid_lengths_raise(theta):
    g, _ = theta
    bad = LengthFunction((0.5, 0.5, 1.0))
    with pytest.raises(ValueError):
        cut_long_edges(g, bad)


def test_embed_theta_tripods(theta):
    g, lam = theta
    t, omega, metric = pipeline(g, lam)
    forest = cut_long_edges(g, lam)
    trees = embed_trees(forest, omega, metric.u_matrix, tree=t)
    tri_u = trees[0]
    leaves = tri_u.positions[1:]
    expected = {(4.0, 0.0), (0.0, 4.0), (-4.0, -4.0)}
    got = {tuple(np.round(p, 9)) for p in leaves}
    assert got == expected
    # positive combination of the unit leg vectors vanishes
    legs = [tri_u.edges[i].direction for i in range(3)]
    assert np.allclose(sum(legs), 0.0, atol=1e-9)
    assert check_tautness(tri_u).ok


def test_embed_rose2_star(rose2):
    g, lam = rose2
    t, omega, metric = pipeline(g, lam)
    forest = cut_long_edges(g, lam)
    (star,) = embed_trees(forest, omega, metric.u_matrix, tree=t)
    dirs = np.array([star.edges[i].direction for i in range(4)]) / 4.0
    got = {tuple(np.round(d, 9)) for d in dirs}
    assert got == {(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)}
    for i in range(4):
        for j in range(i + 1, 4):
            assert dirs[i] @ dirs[j] <= 1e-12
    assert check_tautness(star).ok


def test_external_edges_at_least_4_random():
    rng = np.random.default_rng(23)
    for _ in range(20):
        g = oracles.make_bridgeless(oracles.random_connected_graph(rng))
        if g.n_edges - g.n_vertices + 1 == 0:
            continue
        lam = oracles.random_valid_lengths(rng, g)
        t, omega, metric = pipeline(g, lam)
        forest = cut_long_edges(g, lam)
        trees = embed_trees(forest, omega, metric.u_matrix, tree=t)
        for tree in trees:
            report = check_tautness(tree)
            assert report.ok, [i.to_dict() for i in report.failures()]


def test_tautness_rejects_reflex_path():
    # a zig-zag with an acute turn: second pair of segments has negative dot
    positions = np.array([[0.0, 0.0], [1.0, 0.0], [0.2, 0.4]])
    tree = embedded_tree_from_positions(positions, [(0, 1), (1, 2)])
    report = check_tautness(tree)
    names = {i.check: i.status for i in report.items}
    assert names["path_segments_nonnegative_dot"] == "fail"


def test_tautness_single_segment():
    positions = np.array([[0.0, 0.0], [8.0, 0.0]])
    tree = embedded_tree_from_positions(positions, [(0, 1)], external=[True])
    assert check_tautness(tree).ok


def test_glue_translation_is_lattice_vector(theta):
    g, lam = theta
    t, omega, metric = pipeline(g, lam)
    forest = cut_long_edges(g, lam)
    trees = embed_trees(forest, omega, metric.u_matrix, tree=t)
    lattice = 4.0 * metric.u_matrix
    for pair in forest.glue_pairs:
        ta, tb = trees[pair.tree_a], trees[pair.tree_b]
        tau = glue_translation(ta, ta.external_edges[pair.stub_a], tb, tb.external_edges[pair.stub_b])
        frac = np.linalg.solve(lattice, tau)
        assert np.max(np.abs(frac - np.round(frac))) < 1e-9
