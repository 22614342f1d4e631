from __future__ import annotations

import json

import numpy as np
import pytest

from graphjac.family import (
    SimplexFamily,
    face_compatibility_check,
    family_cocycle,
    family_cocycle_path,
    family_embedded_trees,
    interpolate_length,
    parse_family,
    simplex_family_from_dict,
)
from graphjac.graphs import graph_from_dict, validate_length_function
from graphjac.immersion import check_tautness
from graphjac.thickening import GridConfig, ThickeningField, sublevel_region


def theta_rose_family(data_dir):
    return parse_family((data_dir / "theta_rose_family.json").read_text())


def test_interpolate_vertices_and_midpoint(data_dir):
    fam = theta_rose_family(data_dir)
    lam0 = interpolate_length(fam, np.array([1.0, 0.0]))
    assert lam0.edge_lengths == (1.0, 1.0, 1.0)
    lam_mid = interpolate_length(fam, np.array([0.5, 0.5]))
    assert lam_mid.edge_lengths == (1.0, 1.0, 0.5)
    lam1 = interpolate_length(fam, np.array([0.0, 1.0]))
    assert lam1.edge_lengths == (1.0, 1.0, 0.0)


def test_interpolate_rejects_outside_simplex(data_dir):
    fam = theta_rose_family(data_dir)
    with pytest.raises(ValueError):
        interpolate_length(fam, np.array([0.7, 0.7]))
    with pytest.raises(ValueError):
        interpolate_length(fam, np.array([1.2, -0.2]))


def test_interpolated_always_valid(data_dir):
    fam = theta_rose_family(data_dir)
    rng = np.random.default_rng(0)
    for _ in range(50):
        t = rng.dirichlet(np.ones(fam.n_stages))
        lam = interpolate_length(fam, t)
        assert validate_length_function(fam.graph, lam).ok


def test_family_rejects_cyclic_collapse():
    doc = {
        "vertices": ["u", "v"],
        "edges": [
            {"id": "a", "source": "u", "target": "v"},
            {"id": "b", "source": "u", "target": "v"},
        ],
    }
    g = graph_from_dict(doc)
    with pytest.raises(ValueError):
        SimplexFamily(g, (frozenset({0, 1}),))


def test_family_cocycle_at_vertices(data_dir):
    fam = theta_rose_family(data_dir)
    omega0, _ = family_cocycle(fam, np.array([1.0, 0.0]))
    assert np.allclose(omega0.values[4], [-1 / 3, -1 / 3])  # theta value on c
    omega1, _ = family_cocycle(fam, np.array([0.0, 1.0]))
    assert np.allclose(omega1.values[0], [1.0, 0.0])
    assert np.allclose(omega1.values[2], [0.0, 1.0])


def test_family_cocycle_path_smoothness(data_dir):
    fam = theta_rose_family(data_dir)
    report = family_cocycle_path(fam, np.array([0.9, 0.1]), np.array([0.1, 0.9]))
    assert report.ok, [i.to_dict() for i in report.items]


def test_face_compatibility(data_dir):
    fam = theta_rose_family(data_dir)
    report = face_compatibility_check(fam, 1)
    assert report.ok, [i.to_dict() for i in report.items]
    # the identity face is trivially compatible
    assert face_compatibility_check(fam, 0).ok


def test_family_trees_taut_across_simplex(data_dir):
    fam = theta_rose_family(data_dir)
    for tv in ([1.0, 0.0], [0.75, 0.25], [0.5, 0.5], [0.25, 0.75], [0.0, 1.0]):
        trees, _ = family_embedded_trees(fam, np.array(tv))
        assert len(trees) == 1
        assert check_tautness(trees[0]).ok, tv


def test_family_positions_continuous(data_dir):
    fam = theta_rose_family(data_dir)
    prev = None
    for s in np.linspace(0.0, 1.0, 9):
        trees, _ = family_embedded_trees(fam, np.array([1.0 - s, s]))
        pos = trees[0].positions
        if prev is not None:
            assert np.max(np.abs(pos - prev)) < 1.5  # no jumps between close samples
        prev = pos


def _family_field_at(fam, s):
    trees, _ = family_embedded_trees(fam, np.array([1.0 - s, s]))
    return ThickeningField(trees[0])


def test_family_phi_continuous_in_t(data_dir):
    # Lipschitz scaling: quartering the t step quarters the Phi jump (any
    # discontinuity would keep the jump size constant)
    fam = theta_rose_family(data_dir)
    rng = np.random.default_rng(1)
    pts = rng.uniform(-6, 6, size=(300, 2))

    def max_jump(delta: float) -> float:
        a = _family_field_at(fam, 0.5 - delta / 2).phi(pts)
        b = _family_field_at(fam, 0.5 + delta / 2).phi(pts)
        return float(np.max(np.abs(a - b)))

    coarse, fine = max_jump(0.2), max_jump(0.05)
    assert fine <= 0.5 * coarse
    assert fine < 0.3


def test_family_gradient_continuous_across_collapse_face(data_dir):
    # the x-gradient converges as t approaches the face where edge c collapses
    fam = theta_rose_family(data_dir)
    rng = np.random.default_rng(2)
    pts = rng.uniform(-5, 5, size=(200, 2))
    at_face = _family_field_at(fam, 1.0).grad(pts)
    gaps = []
    for delta in (0.08, 0.02):
        near = _family_field_at(fam, 1.0 - delta).grad(pts)
        gaps.append(float(np.max(np.abs(near - at_face))))
    assert gaps[1] <= 0.5 * gaps[0]
    assert gaps[1] < 0.2


def test_family_euler_characteristic_constant(data_dir):
    fam = theta_rose_family(data_dir)
    for tv in ([1.0, 0.0], [0.5, 0.5], [0.0, 1.0]):
        trees, lattice = family_embedded_trees(fam, np.array(tv))
        fields = [ThickeningField(t) for t in trees]
        result = sublevel_region(fields, lattice, GridConfig(h=0.1))
        assert result.euler_characteristic == -1, tv


def test_parse_family_rejects_unknown_edges():
    doc = {
        "chain": [
            {"vertices": ["u"], "edges": [{"id": "a", "source": "u", "target": "u"}]},
            ["zz"],
        ]
    }
    with pytest.raises(ValueError):
        simplex_family_from_dict(doc)
