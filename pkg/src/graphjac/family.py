"""Simplex families of metric graphs along chains of collapses.

A chain Gamma_0 -> Gamma_1 -> ... -> Gamma_k is stored on the initial graph
as an increasing sequence of collapsed edge sets C_1 <= ... <= C_k (each a
forest).  At barycentric t the interpolated edge length is the total weight
of the stages the edge survives:

    l_t(E) = sum over i of t_i * [E not in C_i]      (C_0 empty)

which is automatically a valid length function at every point of the closed
simplex: the edges surviving every stage miss the forest C_k, so every
embedded cycle keeps a full-length edge.

Tree decompositions over a family cut exactly the surviving-everywhere
edges, which are the edges of length one at every t; this keeps one fixed
cut combinatorics over the whole simplex with only the vertex positions
moving.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .graphs import (
    GEOMETRIC_TOL,
    Graph,
    LengthFunction,
    Morphism,
    SpanningTreeData,
    collapse,
    graph_from_dict,
    induced_lengths,
    spanning_tree,
    validate_length_function,
)
from .immersion import CutForest, EmbeddedTree, cut_long_edges, embed_trees, vertex_potentials
from .period import BalancedCocycle, canonical_cocycle, good_metric
from .reporting import Report


@dataclass(frozen=True)
class SimplexFamily:
    """Initial graph plus cumulative collapsed edge sets per stage."""

    graph: Graph
    collapsed_stages: tuple[frozenset[int], ...]

    def __post_init__(self) -> None:
        prev: frozenset[int] = frozenset()
        for i, stage in enumerate(self.collapsed_stages):
            if not prev <= stage:
                raise ValueError(f"stage {i + 1} does not contain stage {i}")
            collapse(self.graph, stage)  # raises if not a forest
            prev = stage

    @property
    def k(self) -> int:
        return len(self.collapsed_stages)

    @property
    def n_stages(self) -> int:
        return self.k + 1

    def survives(self, stage: int, edge: int) -> bool:
        if stage == 0:
            return True
        return edge not in self.collapsed_stages[stage - 1]

    def surviving_everywhere(self) -> tuple[int, ...]:
        """Edges of length one at every point of the simplex (the cut set)."""
        if not self.collapsed_stages:
            return tuple(range(self.graph.n_edges))
        last = self.collapsed_stages[-1]
        return tuple(k for k in range(self.graph.n_edges) if k not in last)

    def stage_quotient(self, stage: int) -> tuple[Graph, Morphism]:
        collapsed = self.collapsed_stages[stage - 1] if stage else frozenset()
        return collapse(self.graph, collapsed)

    def barycenter(self) -> np.ndarray:
        return np.full(self.n_stages, 1.0 / self.n_stages)


def simplex_family_from_dict(doc: dict) -> SimplexFamily:
    """{"chain": [graph_document, [edge ids collapsed at stage 1], ...]}.

    The edge sets are per-step; stages accumulate them."""
    chain = doc["chain"]
    g = graph_from_dict(chain[0])
    name_to_idx = {name: k for k, name in enumerate(g.edge_names)}
    stages: list[frozenset[int]] = []
    acc: set[int] = set()
    for step in chain[1:]:
        for name in step:
            if name not in name_to_idx:
                raise ValueError(f"unknown edge id {name!r} in collapse step")
            acc.add(name_to_idx[name])
        stages.append(frozenset(acc))
    return SimplexFamily(g, tuple(stages))


def parse_family(text: str) -> SimplexFamily:
    return simplex_family_from_dict(json.loads(text))


def interpolate_length(fam: SimplexFamily, t: np.ndarray) -> LengthFunction:
    t = np.asarray(t, dtype=float)
    if t.shape != (fam.n_stages,):
        raise ValueError(f"t must have {fam.n_stages} barycentric coordinates")
    if np.any(t < -1e-12) or abs(float(t.sum()) - 1.0) > 1e-9:
        raise ValueError("t must lie in the closed simplex")
    lengths = []
    for k in range(fam.graph.n_edges):
        lengths.append(float(sum(t[i] for i in range(fam.n_stages) if fam.survives(i, k))))
    return LengthFunction(tuple(min(1.0, max(0.0, l)) for l in lengths))


def family_tree(fam: SimplexFamily) -> SpanningTreeData:
    """One spanning tree valid across the whole simplex (computed at the
    barycenter, where the short edges are exactly the eventual collapses)."""
    return spanning_tree(fam.graph, interpolate_length(fam, fam.barycenter()), 0)


def family_cocycle(fam: SimplexFamily, t: np.ndarray, tree: SpanningTreeData | None = None):
    """(omega, U) at barycentric t, in the family's fixed basis."""
    tr = tree if tree is not None else family_tree(fam)
    lam = interpolate_length(fam, t)
    omega = canonical_cocycle(fam.graph, lam, tr)
    metric = good_metric(fam.graph, tr, omega, lam)
    return omega, metric.u_matrix


def family_cut_forest(fam: SimplexFamily, t: np.ndarray | None = None) -> CutForest:
    lam = interpolate_length(fam, t if t is not None else fam.barycenter())
    return cut_long_edges(fam.graph, lam, edges=fam.surviving_everywhere())


def family_embedded_trees(
    fam: SimplexFamily, t: np.ndarray, scale: float = 4.0, tree: SpanningTreeData | None = None
) -> tuple[list[EmbeddedTree], np.ndarray]:
    """Embedded cut trees at parameter t plus the scaled torus lattice."""
    tr = tree if tree is not None else family_tree(fam)
    lam = interpolate_length(fam, t)
    omega, u_matrix = family_cocycle(fam, t, tr)
    forest = cut_long_edges(fam.graph, lam, edges=fam.surviving_everywhere())
    trees = embed_trees(forest, omega, u_matrix, scale=scale, tree=tr)
    return trees, scale * u_matrix


def _flat_cocycle(fam: SimplexFamily, t: np.ndarray, tree: SpanningTreeData) -> np.ndarray:
    omega = canonical_cocycle(fam.graph, interpolate_length(fam, t), tree)
    return omega.values.ravel()


def family_cocycle_path(
    fam: SimplexFamily,
    t_start: np.ndarray,
    t_end: np.ndarray,
    n_samples: int = 9,
    h: float = 0.02,
    ratio_band: tuple[float, float] = (3.2, 4.8),
) -> Report:
    """Smoothness of the canonical cocycle along an affine path in the simplex.

    Checks second-order convergence of central differences of d omega / ds
    under step halving (error-difference ratio near 4) and continuity of the
    potentials along the path."""
    t_start = np.asarray(t_start, dtype=float)
    t_end = np.asarray(t_end, dtype=float)
    tree = family_tree(fam)
    report = Report()

    def at(s: float) -> np.ndarray:
        return _flat_cocycle(fam, (1.0 - s) * t_start + s * t_end, tree)

    def central(s: float, step: float) -> np.ndarray:
        return (at(s + step) - at(s - step)) / (2.0 * step)

    s_mid = 0.5
    d1 = central(s_mid, h)
    d2 = central(s_mid, h / 2.0)
    d3 = central(s_mid, h / 4.0)
    e1 = float(np.linalg.norm(d1 - d2))
    e2 = float(np.linalg.norm(d2 - d3))
    if e2 < 1e-14:
        report.add("fd_order2_ratio", e1 < 1e-12, e1, "derivative constant along path")
    else:
        ratio = e1 / e2
        report.add("fd_order2_ratio", ratio_band[0] <= ratio <= ratio_band[1], ratio)

    samples = np.linspace(0.0, 1.0, n_samples)
    prev_vals = None
    prev_pot = None
    worst_jump = 0.0
    for s in samples:
        t = (1.0 - s) * t_start + s * t_end
        lam = interpolate_length(fam, t)
        omega = canonical_cocycle(fam.graph, lam, tree)
        pot = vertex_potentials(fam.graph, tree, lam, omega, tree.root)
        if prev_vals is not None:
            worst_jump = max(
                worst_jump,
                float(np.max(np.abs(omega.values - prev_vals))),
                float(np.max(np.abs(pot - prev_pot))),
            )
        prev_vals, prev_pot = omega.values, pot
    step_scale = 1.0 / (n_samples - 1)
    report.add("path_continuity", worst_jump <= 10.0 * step_scale + 1e-9, worst_jump)
    validity = Report()
    for s in samples:
        lam = interpolate_length(fam, (1.0 - s) * t_start + s * t_end)
        check = validate_length_function(fam.graph, lam)
        if not check.ok:
            validity.add("interpolated_length_valid", False, location=f"s={s}")
    report.add("interpolated_lengths_valid_along_path", validity.ok)
    return report


def face_compatibility_check(fam: SimplexFamily, stage: int, tol: float = GEOMETRIC_TOL) -> Report:
    """At the simplex vertex t = e_stage the canonical cocycle of the initial
    graph, restricted to surviving half-edges, equals the canonical cocycle
    of the collapsed stage graph; collapsed edges keep zero displacement but
    generally nonzero cocycle value."""
    if not 0 <= stage <= fam.k:
        raise ValueError("stage out of range")
    report = Report()
    t = np.zeros(fam.n_stages)
    t[stage] = 1.0
    lam_face = interpolate_length(fam, t)
    tree = family_tree(fam)
    omega0 = canonical_cocycle(fam.graph, lam_face, tree)

    quotient, morphism = fam.stage_quotient(stage)
    lam_q = induced_lengths(morphism, lam_face, quotient)
    tree_q = spanning_tree(quotient, lam_q, 0)
    omega_q = canonical_cocycle(quotient, lam_q, tree_q)

    chords0 = [fam.graph.edge_names[h // 2] for h in tree.chords]
    chords_q = [quotient.edge_names[h // 2] for h in tree_q.chords]
    report.add("chord_bases_align", chords0 == chords_q, location=f"{chords0} vs {chords_q}")

    worst = 0.0
    for k, img in enumerate(morphism.edge_map):
        if img is None:
            continue
        for parity in (0, 1):
            diff = omega0.values[2 * k + parity] - omega_q.values[2 * img + parity]
            worst = max(worst, float(np.max(np.abs(diff))) if omega0.dim else 0.0)
    report.add("restriction_matches_quotient_cocycle", worst <= tol, worst)

    disp_worst = 0.0
    val_min = float("inf")
    for k, img in enumerate(morphism.edge_map):
        if img is not None:
            continue
        disp = 2.0 * lam_face.half_length(2 * k) * omega0.values[2 * k]
        disp_worst = max(disp_worst, float(np.max(np.abs(disp))))
        val_min = min(val_min, float(np.linalg.norm(omega0.values[2 * k])))
    if morphism.collapsed_edges:
        report.add("collapsed_edges_zero_displacement", disp_worst <= tol, disp_worst)
        report.info("collapsed_edge_min_cocycle_norm", val_min)
    return report
