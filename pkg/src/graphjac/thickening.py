"""Tubular thickening field of an embedded tree.

The scalar field is a product of bump values of distances:

    Phi_T(x) = prod over edges psi(|x - y_i|) / prod over vertices
               psi(|x - v_j|)^(val(v_j) - 1)

with y_i the closest point of edge i.  Anchoring at an edge E0 and pairing
every other edge with its tree-nearest endpoint turns this into a product
of ratios bounded by one (the edge form), which is what we evaluate in log
space.  Phi vanishes exactly on the tree, equals one at distance 3/2 and
beyond, and for taut trees has nonvanishing gradient strictly between --
the property that makes the quarter sublevel set a compact C1 manifold.

The bump profile psi is pinned down explicitly: quadratic up to 1/2, then a
piecewise-cubic ramp whose derivative is a quadratic spline peaking at
sqrt(2)/2 and vanishing at 3/2, normalized so psi(3/2) = 1.  All contracted
properties of psi are re-verified numerically by verify_psi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field
from typing import Sequence

import numpy as np

from .graphs import GEOMETRIC_TOL, STRUCTURAL_TOL
from .immersion import EmbeddedTree, GluePair, TreeEdge, glue_translation
from .reporting import Report

# Breakpoints of the bump profile and the derivative peak height; the peak
# is fixed by requiring the total integral of psi' to be exactly one.
PSI_KNOTS = (0.5, math.sqrt(2.0) / 2.0, 1.5)
_A, _M, _B = PSI_KNOTS
_PEAK = 9.0 / 8.0 - (math.sqrt(2.0) - 1.0) / 4.0
_PSI_AT_M = 0.25 + _PEAK * (_M - _A) - (_PEAK - 1.0) * (_M - _A) / 3.0


def psi(t: np.ndarray | float) -> np.ndarray | float:
    """Bump profile: t^2 up to 1/2, ramping to the constant 1 at 3/2."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise ValueError("psi is defined for nonnegative arguments only")
    out = np.empty_like(arr)
    q = arr < _A
    out[q] = arr[q] ** 2
    mid = (~q) & (arr < _M)
    tm = arr[mid]
    out[mid] = 0.25 + _PEAK * (tm - _A) - (_PEAK - 1.0) * ((_M - _A) ** 3 - (_M - tm) ** 3) / (
        3.0 * (_M - _A) ** 2
    )
    hi = (arr >= _M) & (arr < _B)
    th = arr[hi]
    out[hi] = _PSI_AT_M + _PEAK * ((th - _M) - (th - _M) ** 3 / (3.0 * (_B - _M) ** 2))
    out[arr >= _B] = 1.0
    return out if isinstance(t, np.ndarray) else float(out)


def psi_prime(t: np.ndarray | float) -> np.ndarray | float:
    arr = np.asarray(t, dtype=float)
    if np.any(arr < 0):
        raise ValueError("psi is defined for nonnegative arguments only")
    out = np.zeros_like(arr)
    q = arr < _A
    out[q] = 2.0 * arr[q]
    mid = (~q) & (arr < _M)
    out[mid] = _PEAK - (_PEAK - 1.0) * ((_M - arr[mid]) / (_M - _A)) ** 2
    hi = (arr >= _M) & (arr < _B)
    out[hi] = _PEAK * (1.0 - ((arr[hi] - _M) / (_B - _M)) ** 2)
    return out if isinstance(t, np.ndarray) else float(out)


def psi_second(t: np.ndarray | float) -> np.ndarray | float:
    """Analytic second derivative (one-sided at the knots)."""
    arr = np.asarray(t, dtype=float)
    out = np.zeros_like(arr)
    out[arr < _A] = 2.0
    mid = (arr >= _A) & (arr < _M)
    out[mid] = 2.0 * (_PEAK - 1.0) * (_M - arr[mid]) / (_M - _A) ** 2
    hi = (arr >= _M) & (arr < _B)
    out[hi] = -2.0 * _PEAK * (arr[hi] - _M) / (_B - _M) ** 2
    return out if isinstance(t, np.ndarray) else float(out)


def psi_log_ratio(t: np.ndarray) -> np.ndarray:
    """psi'(t)/psi(t); exactly zero from 3/2 on, ~2/t near zero."""
    arr = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(arr >= _B, 0.0, psi_prime(arr) / psi(arr))
    return out


def verify_psi(n: int = 10_000) -> Report:
    """Re-verify the full bump contract on a dense grid.

    Finite differences are used for the curvature bounds; stencils that
    straddle the curvature knot at sqrt(2)/2 are skipped because the smeared
    value mixes the two pieces.
    """
    report = Report()
    grid = _B * (np.arange(1, n + 1) / n)

    quad = grid[grid <= _A]
    err_quad = float(np.max(np.abs(psi(quad) - quad**2)))
    report.add("quadratic_below_half", err_quad <= 1e-12, err_quad)

    interior = grid[grid < _B]
    min_prime = float(np.min(psi_prime(interior)))
    report.add("derivative_positive_inside", min_prime > 0.0, min_prime)

    tail = np.array([_B, 1.6, 2.0, 10.0])
    err_tail = float(max(np.max(np.abs(psi(tail) - 1.0)), np.max(np.abs(psi_prime(tail)))))
    report.add("constant_one_beyond", err_tail <= 1e-15, err_tail)

    vals = psi(grid)
    report.add("range_0_1", bool(np.all((vals >= 0.0) & (vals <= 1.0))), float(np.min(vals)))

    h = 1e-4
    fd_grid = grid[(grid >= 2 * h) & (np.abs(grid - _M) > 2 * h)]
    fd2 = (psi(fd_grid + h) - 2.0 * psi(fd_grid) + psi(fd_grid - h)) / h**2
    inner = fd_grid <= _M
    lo = float(np.min(fd2[inner]))
    hi = float(np.max(fd2[inner]))
    report.add("curvature_in_0_2_below_knee", lo >= -1e-7 and hi <= 2.0 + 1e-7, min(lo, 2.0 - hi))
    outer = fd_grid >= _M
    hi_out = float(np.max(fd2[outer]))
    report.add("curvature_nonpositive_above_knee", hi_out <= 1e-7, -hi_out)

    ratios = psi_log_ratio(interior)
    diffs = np.diff(ratios)
    worst = float(np.max(diffs))
    report.add("log_derivative_strictly_decreasing", worst <= -1e-12, worst)
    return report


# --- the field --------------------------------------------------------------


class ThickeningField:
    """Evaluator for Phi_T and its gradient over an embedded tree.

    Immutable and re-entrant; all evaluation methods are vectorized over an
    (N, r) array of points in the tree's local coordinates.
    """

    def __init__(self, tree: EmbeddedTree, on_tree_tol: float = 1e-12):
        self.tree = tree
        self.on_tree_tol = on_tree_tol
        pos = tree.positions
        self.vert_pos = pos
        self.starts = np.array([pos[e.src] for e in tree.edges]).reshape(len(tree.edges), tree.dim)
        self.vectors = np.array([pos[e.dst] - pos[e.src] for e in tree.edges]).reshape(
            len(tree.edges), tree.dim
        )
        self.len2 = np.einsum("er,er->e", self.vectors, self.vectors)
        self.active = self.len2 > STRUCTURAL_TOL**2
        if not self.active.any():
            raise ValueError("tree has no positive-length edges")
        self.active_idx = np.nonzero(self.active)[0]
        self.valences = tree.valences()
        self._denominator_vertex = self._designated_endpoints()
        lo, hi = tree.bbox()
        self.bbox_lo, self.bbox_hi = lo, hi

    # combinatorics: for each anchor edge a and other edge i, the endpoint of
    # i that is tree-closer to a (the denominator vertex of the edge form)
    def _designated_endpoints(self) -> np.ndarray:
        n_e = len(self.tree.edges)
        n_v = self.tree.n_vertices
        incident: list[list[tuple[int, int]]] = [[] for _ in range(n_v)]
        for i, e in enumerate(self.tree.edges):
            incident[e.src].append((i, e.dst))
            incident[e.dst].append((i, e.src))
        table = np.full((n_e, n_e), -1, dtype=int)
        for a, ea in enumerate(self.tree.edges):
            depth = {ea.src: 0, ea.dst: 0}
            queue = [ea.src, ea.dst]
            while queue:
                v = queue.pop(0)
                for _, w in incident[v]:
                    if w not in depth:
                        depth[w] = depth[v] + 1
                        queue.append(w)
            for i, ei in enumerate(self.tree.edges):
                if i != a:
                    table[a, i] = ei.src if depth[ei.src] <= depth[ei.dst] else ei.dst
        return table

    def _edge_geometry(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Distances (N, E) and offset unit vectors (N, E, r) to each edge."""
        n = x.shape[0]
        n_e = len(self.tree.edges)
        dist = np.empty((n, n_e))
        units = np.empty((n, n_e, x.shape[1]))
        for i in range(n_e):
            rel = x - self.starts[i]
            if self.active[i]:
                tpar = np.clip(rel @ self.vectors[i] / self.len2[i], 0.0, 1.0)
            else:
                tpar = np.zeros(n)
            off = rel - tpar[:, None] * self.vectors[i]
            d = np.linalg.norm(off, axis=1)
            dist[:, i] = d
            with np.errstate(invalid="ignore", divide="ignore"):
                units[:, i, :] = off / d[:, None]
        return dist, units

    def distance(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        dist, _ = self._edge_geometry(x)
        return dist[:, self.active].min(axis=1)

    def _common(self, x: np.ndarray):
        dist, units = self._edge_geometry(x)
        rho = np.linalg.norm(x[:, None, :] - self.vert_pos[None, :, :], axis=2)
        tree_dist = dist[:, self.active].min(axis=1)
        on_tree = tree_dist < self.on_tree_tol
        anchor = self.active_idx[np.argmin(dist[:, self.active], axis=1)]
        denom = self._denominator_vertex[anchor]  # (N, E), -1 at the anchor column
        rho_den = np.take_along_axis(rho, np.maximum(denom, 0), axis=1)
        not_anchor = np.ones_like(dist, dtype=bool)
        not_anchor[np.arange(x.shape[0]), anchor] = False
        return dist, units, rho, on_tree, anchor, rho_den, not_anchor

    def phi(self, x: np.ndarray) -> np.ndarray:
        """Phi_T at each point: edge form in log space, 0 on the tree."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        dist, _, _, on_tree, anchor, rho_den, not_anchor = self._common(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_num = np.log(psi(dist))
            log_den = np.log(psi(rho_den))
            ratios = np.where(not_anchor, log_num - log_den, 0.0)
            total = log_num[np.arange(x.shape[0]), anchor] + ratios.sum(axis=1)
            out = np.exp(total)
        out = np.where(on_tree, 0.0, np.minimum(out, 1.0))
        return out

    def phi_vertex_formula(self, x: np.ndarray) -> np.ndarray:
        """The defining product over all edges and vertices, also in log
        space; must agree with phi to full precision away from the tree."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        dist, _ = self._edge_geometry(x)
        rho = np.linalg.norm(x[:, None, :] - self.vert_pos[None, :, :], axis=2)
        on_tree = dist[:, self.active].min(axis=1) < self.on_tree_tol
        with np.errstate(divide="ignore", invalid="ignore"):
            total = np.log(psi(dist)).sum(axis=1)
            total -= (np.log(psi(rho)) * (self.valences - 1)[None, :]).sum(axis=1)
            out = np.exp(total)
        return np.where(on_tree, 0.0, np.minimum(out, 1.0))

    def grad(self, x: np.ndarray) -> np.ndarray:
        """Gradient of Phi_T, treating closest points as stationary; zero on
        the tree by continuity."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        n = x.shape[0]
        dist, units, rho, on_tree, anchor, rho_den, not_anchor = self._common(x)
        rows = np.arange(n)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_ratios = np.where(not_anchor, np.log(psi(dist)) - np.log(psi(rho_den)), 0.0)
            rest = np.exp(log_ratios.sum(axis=1))  # product of non-anchor ratios
            lr_edge = psi_log_ratio(dist)
            lr_den = psi_log_ratio(rho_den)
            denom_idx = np.maximum(self._denominator_vertex[anchor], 0)
            with np.errstate(invalid="ignore", divide="ignore"):
                w_den = (x[:, None, :] - self.vert_pos[denom_idx]) / rho_den[:, :, None]
            term = np.where(not_anchor[:, :, None], lr_edge[:, :, None] * units - lr_den[:, :, None] * w_den, 0.0)
            term = np.nan_to_num(term, nan=0.0, posinf=0.0, neginf=0.0).sum(axis=1)
            d0 = dist[rows, anchor]
            u0 = units[rows, anchor]
            grad = rest[:, None] * (psi_prime(d0)[:, None] * u0 + psi(d0)[:, None] * term)
        grad[on_tree] = 0.0
        return np.nan_to_num(grad, nan=0.0)

    def phi_at(self, x) -> float:
        return float(self.phi(np.asarray(x, dtype=float)[None, :])[0])

    def grad_at(self, x) -> np.ndarray:
        return self.grad(np.asarray(x, dtype=float)[None, :])[0]


def phi_eval(field: ThickeningField, x) -> float:
    return field.phi_at(x)


def phi_grad(field: ThickeningField, x) -> np.ndarray:
    return field.grad_at(x)


# --- field-level verification ------------------------------------------------


def subdivide_tree(tree: EmbeddedTree, edge_index: int, fraction: float) -> EmbeddedTree:
    """Insert a bivalent vertex at an interior point of an edge.

    Only used to test invariance of Phi; breaks the taut invariants on
    purpose, so the pieces are not marked external.
    """
    if not 0 <= edge_index < len(tree.edges):
        raise ValueError("edge index out of range")
    if not STRUCTURAL_TOL < fraction < 1.0 - STRUCTURAL_TOL:
        raise ValueError("subdivision point must be strictly interior")
    e = tree.edges[edge_index]
    new_pos = tree.positions[e.src] + fraction * (tree.positions[e.dst] - tree.positions[e.src])
    positions = np.vstack([tree.positions, new_pos[None, :]])
    mid = positions.shape[0] - 1
    first = TreeEdge(e.src, mid, e.direction, False, e.label + ".1")
    second = TreeEdge(mid, e.dst, e.direction, False, e.label + ".2")
    edges = list(tree.edges)
    edges[edge_index] = first
    edges.append(second)
    externals = tuple(i for i in tree.external_edges if i != edge_index)
    return EmbeddedTree(
        positions,
        tuple(edges),
        tree.offset,
        tree.scale,
        tree.vertex_labels + (f"sub:{e.label}",),
        externals,
        tree.name + "+sub",
    )


def subdivision_report(tree: EmbeddedTree, n_points: int = 1000, n_splits: int = 5, seed: int = 0,
                       tol: float = STRUCTURAL_TOL) -> Report:
    """Phi is unchanged by bivalent subdivision (max abs difference)."""
    rng = np.random.default_rng(seed)
    base = ThickeningField(tree)
    lo, hi = tree.bbox()
    pts = rng.uniform(lo - 1.5, hi + 1.5, size=(n_points, tree.dim))
    reference = base.phi(pts)
    worst = 0.0
    active = [i for i in range(len(tree.edges)) if np.linalg.norm(tree.displacement(i)) > STRUCTURAL_TOL]
    for _ in range(n_splits):
        idx = int(rng.choice(active))
        frac = float(rng.uniform(0.05, 0.95))
        split = ThickeningField(subdivide_tree(tree, idx, frac))
        worst = max(worst, float(np.max(np.abs(split.phi(pts) - reference))))
    report = Report()
    report.add("subdivision_invariance", worst <= tol, worst, tree.name)
    return report


def formula_agreement_report(field: ThickeningField, n_points: int = 10_000, seed: int = 0,
                             tol: float = STRUCTURAL_TOL) -> Report:
    """Edge form vs defining vertex form of Phi at random points."""
    rng = np.random.default_rng(seed)
    lo, hi = field.bbox_lo, field.bbox_hi
    pts = rng.uniform(lo - 1.5, hi + 1.5, size=(n_points, field.tree.dim))
    err = float(np.max(np.abs(field.phi(pts) - field.phi_vertex_formula(pts))))
    report = Report()
    report.add("edge_formula_equals_vertex_formula", err <= tol, err, field.tree.name)
    return report


def admissible_samples(
    field: ThickeningField,
    n_points: int,
    rng: np.random.Generator,
    phi_band: tuple[float, float] = (0.05, 0.95),
    clearance: float = 1e-3,
    knot_shell: float = 1e-4,
    max_batches: int = 400,
) -> np.ndarray:
    """Sample points where central differences cleanly approximate the
    gradient: away from projection-switch loci, vertices, and the spherical
    shells where a distance hits a curvature knot of psi."""
    lo, hi = field.bbox_lo, field.bbox_hi
    dim = field.tree.dim
    collected: list[np.ndarray] = []
    count = 0
    knots = np.array(PSI_KNOTS)
    for _ in range(max_batches):
        pts = rng.uniform(lo - 1.5, hi + 1.5, size=(4 * n_points, dim))
        dist, _ = field._edge_geometry(pts)
        rho = np.linalg.norm(pts[:, None, :] - field.vert_pos[None, :, :], axis=2)
        ok = np.ones(len(pts), dtype=bool)
        for i in field.active_idx:
            rel = (pts - field.starts[i]) @ field.vectors[i] / field.len2[i]
            length = math.sqrt(field.len2[i])
            switch = np.minimum(np.abs(rel), np.abs(rel - 1.0)) * length
            ok &= switch >= clearance
        ok &= rho.min(axis=1) >= clearance
        all_d = np.concatenate([dist[:, field.active], rho], axis=1)
        near_knot = np.min(np.abs(all_d[:, :, None] - knots[None, None, :]), axis=(1, 2))
        ok &= near_knot >= knot_shell
        vals = field.phi(pts)
        ok &= (vals >= phi_band[0]) & (vals <= phi_band[1])
        good = pts[ok]
        collected.append(good)
        count += len(good)
        if count >= n_points:
            break
    if count < n_points:
        raise RuntimeError(f"could not collect {n_points} admissible samples (got {count})")
    return np.concatenate(collected)[:n_points]


def gradient_fd_report(
    field: ThickeningField,
    n_points: int = 10_000,
    seed: int = 0,
    step: float = 1e-5,
    tol: float = 1e-6,
) -> Report:
    """Analytic gradient vs central finite differences at admissible points."""
    rng = np.random.default_rng(seed)
    pts = admissible_samples(field, n_points, rng)
    analytic = field.grad(pts)
    dim = field.tree.dim
    fd = np.zeros_like(analytic)
    for j in range(dim):
        ej = np.zeros(dim)
        ej[j] = step
        fd[:, j] = (field.phi(pts + ej) - field.phi(pts - ej)) / (2.0 * step)
    scale = np.maximum(np.linalg.norm(analytic, axis=1), np.linalg.norm(fd, axis=1))
    rel = np.linalg.norm(analytic - fd, axis=1) / np.maximum(scale, 1e-300)
    worst = float(np.max(rel))
    report = Report()
    report.add("gradient_matches_finite_differences", worst <= tol, worst, field.tree.name)
    return report


@dataclass
class KeyLemmaConfig:
    n_samples: int = 100_000
    seed: int = 0
    phi_band: tuple[float, float] = (0.05, 0.95)
    grad_tol: float = 1e-8
    inflate: float = 1.5


def verify_key_lemma(field: ThickeningField, config: KeyLemmaConfig | None = None) -> Report:
    """Sampled check that the gradient never vanishes strictly between the
    levels 0 and 1 (regularity of every interior level)."""
    cfg = config or KeyLemmaConfig()
    rng = np.random.default_rng(cfg.seed)
    lo, hi = field.bbox_lo, field.bbox_hi
    pts = rng.uniform(lo - cfg.inflate, hi + cfg.inflate, size=(cfg.n_samples, field.tree.dim))
    vals = field.phi(pts)
    band = (vals >= cfg.phi_band[0]) & (vals <= cfg.phi_band[1])
    report = Report()
    if not band.any():
        report.add("key_lemma_gradient_nonzero", True, float("inf"), field.tree.name + " (no band samples)")
        return report
    norms = np.linalg.norm(field.grad(pts[band]), axis=1)
    min_norm = float(np.min(norms))
    violations = int(np.sum(norms <= cfg.grad_tol))
    report.add(
        "key_lemma_gradient_nonzero",
        violations == 0,
        min_norm,
        f"{field.tree.name}: {int(band.sum())} band samples",
    )
    return report


def leaf_standardness_report(
    field: ThickeningField,
    n_samples: int = 400,
    seed: int = 0,
    tol: float = GEOMETRIC_TOL,
    reach: float = 2.5,
) -> Report:
    """Near the leaves the field reduces to psi of the distance to the
    external edge, so the quarter sublevel is the standard radius-1/2
    cylinder there.  Also probes the exact value 1/4 at offset 1/2."""
    tree = field.tree
    report = Report()
    rng = np.random.default_rng(seed)
    if not tree.external_edges:
        report.info("leaf_standardness_skipped", None, tree.name + ": no external edges")
        return report
    worst = 0.0
    quarter_worst = 0.0
    for idx in tree.external_edges:
        e = tree.edges[idx]
        a = tree.positions[e.src]
        d = tree.positions[e.dst] - tree.positions[e.src]
        length = float(np.linalg.norm(d))
        axis = d / length
        arcs = length - rng.uniform(0.0, reach, size=n_samples)
        beyond = length + rng.uniform(0.0, 1.2, size=n_samples // 4)
        arcs = np.concatenate([arcs, beyond])
        offs = rng.uniform(0.05, 1.45, size=len(arcs))
        pts = np.empty((len(arcs), tree.dim))
        for row, (s, off) in enumerate(zip(arcs, offs)):
            perp = _random_perp(rng, axis)
            pts[row] = a + s * axis + off * perp
        rel = pts - a
        tpar = np.clip(rel @ d / (length**2), 0.0, 1.0)
        seg_dist = np.linalg.norm(rel - tpar[:, None] * d, axis=1)
        predicted = psi(seg_dist)
        err = float(np.max(np.abs(field.phi(pts) - predicted)))
        worst = max(worst, err)

        # exact quarter at offset one half near the leaf
        for s in (length - 0.25, length - 1.0, length - 2.0):
            perp = _random_perp(rng, axis)
            probe = a + s * axis + 0.5 * perp
            quarter_worst = max(quarter_worst, abs(field.phi_at(probe) - 0.25))
    report.add("phi_equals_psi_of_distance_near_leaves", worst <= tol, worst, tree.name)
    report.add("quarter_level_at_half_offset", quarter_worst <= STRUCTURAL_TOL, quarter_worst, tree.name)
    return report


def _random_perp(rng: np.random.Generator, axis: np.ndarray) -> np.ndarray:
    dim = len(axis)
    if dim < 2:
        return np.zeros(dim)
    while True:
        v = rng.normal(size=dim)
        v -= (v @ axis) * axis
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            return v / norm


def pasting_report(
    trees: Sequence[EmbeddedTree],
    glue_pairs: Sequence[GluePair],
    lattice: np.ndarray | None = None,
    n_samples: int = 60,
    seed: int = 0,
    tol: float = GEOMETRIC_TOL,
) -> Report:
    """On each glued pair of external edges the two sides' fields agree on
    the shared cylinder (the stretch standard from both junctions)."""
    report = Report()
    rng = np.random.default_rng(seed)
    fields = [ThickeningField(t) for t in trees]
    worst = 0.0
    where = ""
    for pair in glue_pairs:
        ta, tb = trees[pair.tree_a], trees[pair.tree_b]
        ia, ib = ta.external_edges[pair.stub_a], tb.external_edges[pair.stub_b]
        tau = glue_translation(ta, ia, tb, ib)
        if lattice is not None and lattice.shape[0] > 0:
            frac = np.linalg.solve(lattice, tau)
            off = float(np.max(np.abs(frac - np.round(frac))))
            report.add("glue_translation_on_lattice", off <= 1e-6, off, f"{ta.name}:{tb.name}")
        ea = ta.edges[ia]
        a0 = ta.positions[ea.src]
        d = ta.positions[ea.dst] - ta.positions[ea.src]
        length = float(np.linalg.norm(d))
        axis = d / length
        span_lo, span_hi = 1.5, length - 1.5
        if span_hi <= span_lo:
            report.info("pasting_overlap_empty", length, f"{ta.name}:{tb.name}")
            continue
        arcs = rng.uniform(span_lo, span_hi, size=n_samples)
        offs = rng.uniform(0.0, 1.4, size=n_samples)
        pts = np.empty((n_samples, ta.dim))
        for row, (s, off) in enumerate(zip(arcs, offs)):
            perp = _random_perp(rng, axis)
            pts[row] = a0 + s * axis + off * perp
        phi_a = fields[pair.tree_a].phi(pts)
        pts_global = pts + ta.offset
        phi_b = fields[pair.tree_b].phi(pts_global - tau - tb.offset)
        err = float(np.max(np.abs(phi_a - phi_b)))
        if err > worst:
            worst, where = err, f"{ta.name}:{ea.label} ~ {tb.name}:{tb.edges[ib].label}"
    report.add("glued_fields_agree_on_overlap", worst <= tol, worst, where)
    return report


# --- torus sublevel region ---------------------------------------------------


@dataclass
class GridConfig:
    h: float = 0.05
    margin: float = 1.5


@dataclass
class RegionResult:
    euler_characteristic: int
    boundary_loops: list[np.ndarray]
    closed: bool
    min_boundary_gradient: float
    n_ambiguous_cells: int
    grid_shape: tuple[int, int]
    inside_fraction: float
    values: np.ndarray
    lattice: np.ndarray
    level: float
    report: Report = dataclass_field(default_factory=Report)


class _TorusEvaluator:
    """Minimum of the per-tree fields over the deck translates that can
    reach the fundamental domain within the bump support radius."""

    def __init__(self, fields: Sequence[ThickeningField], lattice: np.ndarray, margin: float):
        self.fields = list(fields)
        self.lattice = lattice
        r = lattice.shape[0]
        corners = np.array([lattice @ bits for bits in np.ndindex(*(2,) * r)])
        par_lo, par_hi = corners.min(axis=0), corners.max(axis=0)
        self.shifts: list[list[np.ndarray]] = []
        inv = np.linalg.inv(lattice)
        for f in self.fields:
            lo = f.bbox_lo - margin + f.tree.offset - par_hi
            hi = f.bbox_hi + margin + f.tree.offset - par_lo
            box = np.array([[lo[j], hi[j]] for j in range(r)])
            kcorners = np.array([inv @ np.array([box[j, b] for j, b in enumerate(bits)]) for bits in np.ndindex(*(2,) * r)])
            k_lo = np.floor(kcorners.min(axis=0)).astype(int)
            k_hi = np.ceil(kcorners.max(axis=0)).astype(int)
            shifts = []
            for kk in np.ndindex(*(k_hi - k_lo + 1)):
                k = k_lo + np.array(kk)
                shifts.append(lattice @ k - f.tree.offset)
            self.shifts.append(shifts)

    def phi(self, x: np.ndarray) -> np.ndarray:
        best = np.full(x.shape[0], np.inf)
        for f, shifts in zip(self.fields, self.shifts):
            for s in shifts:
                best = np.minimum(best, f.phi(x + s))
        return best

    def grad_at_min(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(x)
        best = np.full(x.shape[0], np.inf)
        for f, shifts in zip(self.fields, self.shifts):
            for s in shifts:
                vals = f.phi(x + s)
                better = vals < best
                if better.any():
                    out[better] = f.grad(x[better] + s)
                    best = np.minimum(best, vals)
        return out


def sublevel_region(
    fields: Sequence[ThickeningField],
    lattice: np.ndarray,
    grid: GridConfig | None = None,
    level: float = 0.25,
    grad_tol: float = 1e-8,
) -> RegionResult:
    """Extract W = Phi^{-1}[0, level] on the torus R^2 / lattice.

    The fundamental parallelogram is rasterized on a lattice-aligned grid
    (cells are sheared but the contour combinatorics do not care); the
    Euler characteristic is that of the periodic cubical complex spanned by
    the inside grid points, and the boundary comes from marching squares
    with the ambiguous cases resolved by the cell-center average.
    """
    cfg = grid or GridConfig()
    lattice = np.asarray(lattice, dtype=float)
    if lattice.shape != (2, 2):
        raise ValueError("contour extraction is implemented for rank 2 only")
    evaluator = _TorusEvaluator(fields, lattice, cfg.margin)
    n1 = max(8, int(math.ceil(np.linalg.norm(lattice[:, 0]) / cfg.h)))
    n2 = max(8, int(math.ceil(np.linalg.norm(lattice[:, 1]) / cfg.h)))
    uu = np.arange(n1) / n1
    vv = np.arange(n2) / n2
    gu, gv = np.meshgrid(uu, vv, indexing="ij")
    pts = np.stack([gu.ravel(), gv.ravel()], axis=1) @ lattice.T
    values = evaluator.phi(pts).reshape(n1, n2)

    inside = values <= level
    v_count = int(inside.sum())
    e_u = int((inside & np.roll(inside, -1, axis=0)).sum())
    e_v = int((inside & np.roll(inside, -1, axis=1)).sum())
    faces = int(
        (inside & np.roll(inside, -1, axis=0) & np.roll(inside, -1, axis=1) & np.roll(np.roll(inside, -1, axis=0), -1, axis=1)).sum()
    )
    euler = v_count - e_u - e_v + faces

    segments, n_ambiguous = _marching_squares(values, inside, level, n1, n2)
    loops, closed = _stitch_loops(segments)
    if not closed:
        raise ValueError("resolution too coarse: boundary did not close up")

    loops_xy = []
    min_grad = float("inf")
    for loop in loops:
        uv = np.array([_crossing_point(key, values, level, n1, n2) for key in loop])
        xy = uv @ lattice.T
        loops_xy.append(xy)
        grads = evaluator.grad_at_min(xy)
        if len(grads):
            min_grad = min(min_grad, float(np.min(np.linalg.norm(grads, axis=1))))
    if min_grad == float("inf"):
        min_grad = 0.0

    report = Report()
    report.add("boundary_closed_1_manifold", closed, float(len(loops)))
    report.add("level_is_regular_value", min_grad > grad_tol, min_grad)
    report.info("euler_characteristic", float(euler))
    report.info("ambiguous_cells", float(n_ambiguous))
    return RegionResult(
        euler_characteristic=euler,
        boundary_loops=loops_xy,
        closed=closed,
        min_boundary_gradient=min_grad,
        n_ambiguous_cells=n_ambiguous,
        grid_shape=(n1, n2),
        inside_fraction=v_count / (n1 * n2),
        values=values,
        lattice=lattice,
        level=level,
        report=report,
    )


def _marching_squares(values: np.ndarray, inside: np.ndarray, level: float, n1: int, n2: int):
    segments: list[tuple[tuple, tuple]] = []
    ambiguous = 0
    for i in range(n1):
        for j in range(n2):
            i1, j1 = (i + 1) % n1, (j + 1) % n2
            b00, b10 = inside[i, j], inside[i1, j]
            b11, b01 = inside[i1, j1], inside[i, j1]
            crossings = []
            if b00 != b10:
                crossings.append(("u", i, j))
            if b10 != b11:
                crossings.append(("v", i1, j))
            if b01 != b11:
                crossings.append(("u", i, j1))
            if b00 != b01:
                crossings.append(("v", i, j))
            if len(crossings) == 0:
                continue
            if len(crossings) == 2:
                segments.append((crossings[0], crossings[1]))
            elif len(crossings) == 4:
                ambiguous += 1
                center = (values[i, j] + values[i1, j] + values[i1, j1] + values[i, j1]) / 4.0
                bottom, right, top, left = ("u", i, j), ("v", i1, j), ("u", i, j1), ("v", i, j)
                if (center <= level) == bool(b00):
                    segments.extend([(bottom, right), (top, left)])
                else:
                    segments.extend([(bottom, left), (right, top)])
            else:
                raise ValueError("inconsistent marching-squares cell")
    return segments, ambiguous


def _stitch_loops(segments):
    adjacency: dict[tuple, list[tuple]] = {}
    for a, b in segments:
        adjacency.setdefault(a, []).append(b)
        adjacency.setdefault(b, []).append(a)
    closed = all(len(nbrs) == 2 for nbrs in adjacency.values())
    loops = []
    visited: set[tuple] = set()
    if not closed:
        return loops, False
    for start in adjacency:
        if start in visited:
            continue
        loop = [start]
        visited.add(start)
        prev, cur = None, start
        while True:
            nxt = [k for k in adjacency[cur] if k != prev]
            if not nxt:
                return loops, False
            step = nxt[0]
            if step == start:
                break
            loop.append(step)
            visited.add(step)
            prev, cur = cur, step
        loops.append(loop)
    return loops, True


def _crossing_point(key: tuple, values: np.ndarray, level: float, n1: int, n2: int) -> np.ndarray:
    kind, i, j = key
    if kind == "u":
        va, vb = values[i, j], values[(i + 1) % n1, j]
        s = 0.5 if vb == va else (level - va) / (vb - va)
        return np.array([(i + s) / n1, j / n2])
    va, vb = values[i, j], values[i, (j + 1) % n2]
    s = 0.5 if vb == va else (level - va) / (vb - va)
    return np.array([i / n1, (j + s) / n2])
