"""Balanced cocycles and the length-weighted period matrix.

A balanced cocycle assigns a vector to each half-edge with omega(mate) =
-omega(e) and zero sum over the half-edges into each vertex.  Restriction
to the chords of a spanning tree is an isomorphism onto (R^d)^r, and the
weighted integration map

    lambda_*(omega)(gamma_j) = sum over e in gamma_j of 2 lambda(e) omega(e)

becomes, in chord coordinates, multiplication by the Gram matrix

    G[j][i] = sum over edges E of l(E) a_j(E) a_i(E)

of the fundamental cycles.  The canonical cocycle is the preimage of the
identity under this map: its chord values are the columns of G^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graphs import (
    GEOMETRIC_TOL,
    STRUCTURAL_TOL,
    Graph,
    LengthFunction,
    SpanningTreeData,
    chord_coefficients,
    cycle_basis,
    separating_edges,
    validate_length_function,
)
from .linalg import NotPositiveDefiniteError, invert_spd, solve_spd
from .reporting import Report


@dataclass(frozen=True)
class BalancedCocycle:
    """Half-edge-indexed vectors satisfying antisymmetry and vertex balance.

    values has shape (2m, d).  chords records which spanning-tree chords
    provided the coordinates (the basis tag).
    """

    graph: Graph
    values: np.ndarray
    chords: tuple[int, ...]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def value(self, h: int) -> np.ndarray:
        return self.values[h]

    def chord_matrix(self) -> np.ndarray:
        """Columns are the values at the chord half-edges."""
        return self.values[list(self.chords)].T

    def balance_residual(self) -> float:
        worst = 0.0
        for v in range(self.graph.n_vertices):
            s = np.zeros(self.dim)
            for h in self.graph.half_edges_into(v):
                s += self.values[h]
            worst = max(worst, float(np.max(np.abs(s))) if self.dim else 0.0)
        return worst


def extend_cocycle(g: Graph, t: SpanningTreeData, w: Sequence[np.ndarray]) -> BalancedCocycle:
    """Unique balanced cocycle taking the given values on the chords.

    The value on any half-edge is the signed {-1,0,+1} combination of the
    chord values determined by fundamental-cycle membership.
    """
    if len(w) != t.rank:
        raise ValueError(f"need {t.rank} chord vectors, got {len(w)}")
    mat = np.atleast_2d(np.asarray(w, dtype=float))
    coeff = chord_coefficients(g, t)
    return BalancedCocycle(g, coeff @ mat, t.chords)


@dataclass(frozen=True)
class PeriodMatrix:
    """Length-weighted Gram matrix of the fundamental cycles (SPD for valid lengths)."""

    matrix: np.ndarray
    chords: tuple[int, ...]

    @property
    def rank(self) -> int:
        return self.matrix.shape[0]


def cycle_incidence(g: Graph, t: SpanningTreeData) -> np.ndarray:
    """(r, m) signed incidence of the fundamental cycles on the edges."""
    rows = [cyc.incidence_vector(g.n_edges) for cyc in cycle_basis(g, t)]
    return np.array(rows, dtype=float).reshape(t.rank, g.n_edges)


def period_matrix(g: Graph, t: SpanningTreeData, lam: LengthFunction) -> PeriodMatrix:
    check = validate_length_function(g, lam)
    if not check.ok:
        raise ValueError("invalid length function: " + "; ".join(i.check for i in check.failures()))
    inc = cycle_incidence(g, t)
    gram = inc @ np.diag(lam.as_array()) @ inc.T
    gram = (gram + gram.T) / 2.0
    try:
        solve_spd(gram, np.eye(t.rank))
    except NotPositiveDefiniteError as exc:
        raise NotPositiveDefiniteError(f"period matrix not positive definite ({exc}); length data invalid") from exc
    return PeriodMatrix(gram, t.chords)


def canonical_cocycle(g: Graph, lam: LengthFunction, t: SpanningTreeData) -> BalancedCocycle:
    """The balanced cocycle whose weighted integrals over the cycle basis
    give the identity; its chord-value columns are G^{-1}."""
    gram = period_matrix(g, t, lam).matrix
    w = invert_spd(gram)  # row i = value at chord i (symmetric, so also column i)
    return extend_cocycle(g, t, w)


def lambda_star(omega: BalancedCocycle, lam: LengthFunction, t: SpanningTreeData) -> np.ndarray:
    """Integrate a cocycle over the fundamental cycles: rows are
    lambda_*(omega)(gamma_j) = sum of 2 lambda(e) omega(e) over the cycle."""
    rows = []
    for cyc in cycle_basis(omega.graph, t):
        s = np.zeros(omega.dim)
        for h in cyc.half_edges:
            s = s + 2.0 * lam.half_length(h) * omega.values[h]
        rows.append(s)
    return np.array(rows).reshape(t.rank, omega.dim)


def check_nonsingular(omega: BalancedCocycle, zero_tol: float = GEOMETRIC_TOL) -> Report:
    """Span check plus list of vanishing half-edges.

    For the canonical cocycle the vanishing edges must be exactly the
    separating edges; the comparison is included when the rank matches.
    """
    g = omega.graph
    report = Report()
    if omega.dim == 0:
        spans = True
        sigma_min = 0.0
    else:
        svals = np.linalg.svd(omega.values, compute_uv=False)
        sigma_min = float(svals[omega.dim - 1]) if len(svals) >= omega.dim else 0.0
        spans = sigma_min > zero_tol * (float(svals[0]) if len(svals) else 1.0)
    report.add("values_span_full_rank", spans, sigma_min)
    norms = np.linalg.norm(omega.values, axis=1) if omega.dim else np.zeros(g.n_half_edges)
    zero_halves = [h for h in range(g.n_half_edges) if norms[h] < zero_tol]
    zero_edges = sorted({h // 2 for h in zero_halves})
    report.info("zero_half_edges", float(len(zero_halves)), ",".join(g.edge_names[k] for k in zero_edges))
    bridges = separating_edges(g)
    report.add(
        "zero_set_equals_separating_edges",
        set(zero_edges) == bridges,
        location=f"zero={zero_edges} bridges={sorted(bridges)}",
    )
    return report


@dataclass(frozen=True)
class GoodMetric:
    """Scalar product S making the chord cocycle values orthonormal, and the
    transform U sending them to the standard basis (S = U^T U)."""

    s_matrix: np.ndarray
    u_matrix: np.ndarray


def good_metric(g: Graph, t: SpanningTreeData, omega: BalancedCocycle, lam: LengthFunction | None = None) -> GoodMetric:
    """Orthonormalize the chord values of a canonical cocycle.

    Requires the tree to contain every edge of less-than-maximal length
    (that is what makes the sibling sign condition hold).  Verifies
    orthonormality and the nonpositive same-source pair condition.
    """
    if lam is not None:
        missing = [k for k in range(g.n_edges) if not lam.is_long(k) and k not in t.tree_edges]
        if missing:
            names = ",".join(g.edge_names[k] for k in missing)
            raise ValueError(f"tree is missing short edges: {names}")
    r = t.rank
    m = omega.chord_matrix()
    if m.shape != (r, r):
        raise ValueError("good metric needs square chord values (canonical cocycle)")
    if r == 0:
        return GoodMetric(np.zeros((0, 0)), np.zeros((0, 0)))
    if np.linalg.matrix_rank(m, tol=GEOMETRIC_TOL) < r:
        raise ValueError("cocycle is singular; chord values do not span")
    u = np.linalg.solve(m, np.eye(r))
    s = u.T @ u

    gram = m.T @ s @ m
    if float(np.max(np.abs(gram - np.eye(r)))) > 1e-10:
        raise ValueError("orthonormality failed beyond tolerance")
    report = sign_condition_report(g, omega, u)
    if not report.ok:
        raise ValueError("good-metric sign condition violated: " + "; ".join(i.location for i in report.failures()))
    return GoodMetric(s, u)


def sign_condition_report(g: Graph, omega: BalancedCocycle, u_matrix: np.ndarray, tol: float = 1e-12) -> Report:
    """Nonpositivity of <omega(e), omega(e')>_S over distinct half-edge pairs
    with a common source vertex."""
    report = Report()
    coords = omega.values @ u_matrix.T  # row h = U omega(h)
    worst = -np.inf
    where = ""
    for v in range(g.n_vertices):
        out = g.half_edges_out_of(v)
        for i in range(len(out)):
            for j in range(i + 1, len(out)):
                d = float(coords[out[i]] @ coords[out[j]])
                if d > worst:
                    worst = d
                    where = f"vertex {g.vertex_names[v]} halves {out[i]},{out[j]}"
    if worst == -np.inf:
        worst = 0.0
    report.add("same_source_pairs_nonpositive", worst <= tol, worst, where)
    return report


def balance_report(omega: BalancedCocycle, tol: float = STRUCTURAL_TOL) -> Report:
    report = Report()
    anti = float(np.max(np.abs(omega.values + omega.values[[h ^ 1 for h in range(omega.graph.n_half_edges)]]))) if omega.dim else 0.0
    report.add("antisymmetry", anti <= tol, anti)
    residual = omega.balance_residual()
    report.add("vertex_balance", residual <= tol, residual)
    return report


def lambda_star_identity_report(
    g: Graph, lam: LengthFunction, t: SpanningTreeData, omega: BalancedCocycle, tol: float = STRUCTURAL_TOL
) -> Report:
    """For the canonical cocycle the weighted cycle integrals are the identity."""
    report = Report()
    image = lambda_star(omega, lam, t)
    err = float(np.max(np.abs(image - np.eye(t.rank)))) if t.rank else 0.0
    report.add("lambda_star_is_identity", err <= tol, err)
    return report


def coefficient_structure_report(g: Graph, t: SpanningTreeData, omega: BalancedCocycle, tol: float = GEOMETRIC_TOL) -> Report:
    """Expressing each value in the chord values must give coefficients in
    {-1, 0, +1}; cross-checked against the combinatorial cycle membership."""
    report = Report()
    m = omega.chord_matrix()
    expected = chord_coefficients(g, t).astype(float)
    if t.rank == 0:
        report.add("coefficients_integer", True, 0.0)
        return report
    solved = np.linalg.lstsq(m, omega.values.T, rcond=None)[0].T
    err = float(np.max(np.abs(solved - expected)))
    report.add("coefficients_integer", err <= tol, err)
    return report
