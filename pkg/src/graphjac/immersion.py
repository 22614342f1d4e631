"""Abel-Jacobi immersion of a metric graph into its Jacobian torus and the
decomposition into taut embedded trees.

Vertex potentials integrate the canonical cocycle along a spanning tree:
f(v0) = 0 and f(target) = f(source) + 2 lambda(e) omega(e).  Each edge then
maps to the segment from f(source) with displacement 2 lambda(e) omega(e);
for a chord the closure defect is exactly the lattice class of its
fundamental cycle, so the map descends to the torus H_1(R)/H_1(Z).

Cutting every full-length edge at its midpoint breaks the graph into trees.
Each side of a cut keeps its half doubled to the full edge, embedded in good
coordinates (after the orthonormalizing transform U) at a fixed scale, which
makes every external edge at least 4 units long.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .graphs import (
    GEOMETRIC_TOL,
    STRUCTURAL_TOL,
    Graph,
    LengthFunction,
    SpanningTreeData,
    separating_edges,
    spanning_tree,
)
from .period import BalancedCocycle, GoodMetric, canonical_cocycle, good_metric
from .reporting import Report

DEFAULT_SCALE = 4.0


def vertex_potentials(
    g: Graph, t: SpanningTreeData, lam: LengthFunction, omega: BalancedCocycle, v0: int = 0
) -> np.ndarray:
    """(n_vertices, d) potentials with f(v0) = 0, propagated along tree edges."""
    f = np.zeros((g.n_vertices, omega.dim))
    adj: list[list[int]] = [[] for _ in range(g.n_vertices)]
    for k in t.tree_edges:
        for h in g.halves(k):
            adj[g.source(h)].append(h)
    seen = {v0}
    queue = [v0]
    while queue:
        v = queue.pop(0)
        for h in adj[v]:
            w = g.target(h)
            if w not in seen:
                seen.add(w)
                f[w] = f[v] + 2.0 * lam.half_length(h) * omega.values[h]
                queue.append(w)
    if len(seen) != g.n_vertices:
        raise ValueError("spanning tree does not reach every vertex")
    return f


@dataclass(frozen=True)
class EdgeSegment:
    edge: int
    half: int
    start: np.ndarray
    displacement: np.ndarray


@dataclass(frozen=True)
class ImmersedGraph:
    """The immersion data: potentials, per-edge segments, and the lattice.

    Raw coordinates are cycle-basis coordinates, where the lattice is Z^r.
    Good coordinates apply u_matrix, making the chord cocycle values
    orthonormal; there the lattice basis is the columns of u_matrix.
    """

    graph: Graph
    lam: LengthFunction
    tree: SpanningTreeData
    omega: BalancedCocycle
    u_matrix: np.ndarray
    potentials: np.ndarray
    segments: tuple[EdgeSegment, ...]
    base_vertex: int

    @property
    def rank(self) -> int:
        return self.tree.rank

    def lattice_raw(self) -> np.ndarray:
        return np.eye(self.rank)

    def lattice_good(self) -> np.ndarray:
        return self.u_matrix.copy()

    def good_potentials(self) -> np.ndarray:
        return self.potentials @ self.u_matrix.T

    def closure_defects(self) -> np.ndarray:
        """(r, r) matrix whose row i is the defect of chord i; equals the
        identity in raw coordinates (the geometric form of lambda_* = inc)."""
        rows = []
        for h in self.tree.chords:
            u, v = self.graph.source(h), self.graph.target(h)
            disp = 2.0 * self.lam.half_length(h) * self.omega.values[h]
            rows.append(self.potentials[u] + disp - self.potentials[v])
        return np.array(rows).reshape(self.rank, self.rank)


def torus_immersion(
    g: Graph, lam: LengthFunction, v0: int = 0, tree: SpanningTreeData | None = None
) -> ImmersedGraph:
    """Construct the immersion for a connected graph with a valid length
    function.  The closure defect of chord i must be the i-th lattice
    vector; this is asserted to geometric tolerance."""
    if not g.is_connected():
        raise ValueError("immersion requires a connected graph")
    t = tree if tree is not None else spanning_tree(g, lam, v0)
    omega = canonical_cocycle(g, lam, t)
    metric = good_metric(g, t, omega, lam)
    f = vertex_potentials(g, t, lam, omega, v0)
    segments = tuple(
        EdgeSegment(k, 2 * k, f[g.source(2 * k)].copy(), 2.0 * lam.half_length(2 * k) * omega.values[2 * k])
        for k in range(g.n_edges)
    )
    im = ImmersedGraph(g, lam, t, omega, metric.u_matrix, f, segments, v0)
    defect_err = float(np.max(np.abs(im.closure_defects() - np.eye(t.rank)))) if t.rank else 0.0
    if defect_err > GEOMETRIC_TOL:
        raise AssertionError(f"closure defect off lattice by {defect_err:.3e}")
    return im


def check_local_embedding(im: ImmersedGraph, tol: float = GEOMETRIC_TOL) -> Report:
    """Nonzero displacement on every positive-length non-separating edge,
    plus the nonpositive sibling pair condition in good coordinates."""
    g = im.graph
    report = Report()
    bridges = separating_edges(g)
    flagged: list[str] = []
    collapsed: list[str] = []
    for seg in im.segments:
        norm = float(np.linalg.norm(seg.displacement))
        name = g.edge_names[seg.edge]
        if im.lam.edge_length(seg.edge) <= STRUCTURAL_TOL:
            collapsed.append(name)
        elif norm <= tol:
            flagged.append(name)
    bad = [name for name in flagged if g.edge_names.index(name) not in bridges]
    report.add("positive_length_edges_have_nonzero_displacement", not bad, location=",".join(bad))
    report.info("zero_displacement_bridges", float(len(flagged)), ",".join(flagged))
    report.info("collapsed_edges", float(len(collapsed)), ",".join(collapsed))

    coords = im.omega.values @ im.u_matrix.T
    worst = 0.0
    where = ""
    for v in range(g.n_vertices):
        out = g.half_edges_out_of(v)
        for i in range(len(out)):
            for j in range(i + 1, len(out)):
                d = float(coords[out[i]] @ coords[out[j]])
                if d > worst:
                    worst, where = d, f"vertex {g.vertex_names[v]}"
    report.add("sibling_pairs_nonpositive", worst <= 1e-12, worst, where)
    return report


# --- cutting into trees ----------------------------------------------------


@dataclass(frozen=True)
class CutTree:
    """One component of the cut graph: original vertices, internal edges,
    and the cut half-edges (stubs) rooted at vertices of this component."""

    vertices: tuple[int, ...]
    internal_edges: tuple[int, ...]
    stubs: tuple[int, ...]


@dataclass(frozen=True)
class GluePair:
    """Pairs stub positions across (possibly equal) trees: the two halves of
    one cut edge."""

    tree_a: int
    stub_a: int
    tree_b: int
    stub_b: int


@dataclass(frozen=True)
class CutForest:
    graph: Graph
    lam: LengthFunction
    cut_edges: tuple[int, ...]
    trees: tuple[CutTree, ...]
    glue_pairs: tuple[GluePair, ...]


def cut_long_edges(g: Graph, lam: LengthFunction, edges: Sequence[int] | None = None) -> CutForest:
    """Cut the listed edges (default: every full-length edge) at their
    midpoints.  The remaining edges must form a forest -- guaranteed for a
    valid length function when cutting the full-length edges."""
    cut = sorted(set(edges if edges is not None else lam.long_edges()))
    cut_set = set(cut)

    comp = list(range(g.n_vertices))

    def find(x: int) -> int:
        while comp[x] != x:
            comp[x] = comp[comp[x]]
            x = comp[x]
        return x

    for k in range(g.n_edges):
        if k in cut_set:
            continue
        u, v = g.endpoints(k)
        if u == v or find(u) == find(v):
            raise ValueError(f"cut leaves a cycle through edge {g.edge_names[k]}; length data invalid")
        comp[max(find(u), find(v))] = min(find(u), find(v))

    roots = sorted({find(v) for v in range(g.n_vertices)})
    tree_index = {root: i for i, root in enumerate(roots)}
    members: list[list[int]] = [[] for _ in roots]
    for v in range(g.n_vertices):
        members[tree_index[find(v)]].append(v)

    internal: list[list[int]] = [[] for _ in roots]
    for k in range(g.n_edges):
        if k not in cut_set:
            internal[tree_index[find(g.endpoints(k)[0])]].append(k)

    stubs: list[list[int]] = [[] for _ in roots]
    stub_pos: dict[int, tuple[int, int]] = {}
    for k in cut:
        for h in g.halves(k):
            ti = tree_index[find(g.source(h))]
            stub_pos[h] = (ti, len(stubs[ti]))
            stubs[ti].append(h)

    pairs = tuple(
        GluePair(*stub_pos[2 * k], *stub_pos[2 * k + 1]) for k in cut
    )
    trees = tuple(
        CutTree(tuple(sorted(members[i])), tuple(sorted(internal[i])), tuple(stubs[i]))
        for i in range(len(roots))
    )
    return CutForest(g, lam, tuple(cut), trees, pairs)


# --- embedded trees ---------------------------------------------------------


@dataclass(frozen=True)
class TreeEdge:
    """Directed tree edge src -> dst.  direction is the scaled cocycle vector
    for that orientation; the geometric displacement positions[dst] -
    positions[src] is edge_length times direction (equal for external edges,
    whose doubled length is the full cut edge)."""

    src: int
    dst: int
    direction: np.ndarray
    external: bool
    label: str


@dataclass(frozen=True)
class EmbeddedTree:
    """A tree linearly embedded in good coordinates, based at the origin.

    positions are local (base vertex at 0); offset is the global good
    coordinate of the base, so global = local + offset.  external_edges
    indexes self.edges in stub order for glue lookups.
    """

    positions: np.ndarray
    edges: tuple[TreeEdge, ...]
    offset: np.ndarray
    scale: float
    vertex_labels: tuple[str, ...]
    external_edges: tuple[int, ...]
    name: str = "tree"

    @property
    def n_vertices(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    def valences(self) -> np.ndarray:
        val = np.zeros(self.n_vertices, dtype=int)
        for e in self.edges:
            val[e.src] += 1
            val[e.dst] += 1
        return val

    def displacement(self, i: int) -> np.ndarray:
        e = self.edges[i]
        return self.positions[e.dst] - self.positions[e.src]

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.positions.min(axis=0), self.positions.max(axis=0)

    def transformed(self, rotation: np.ndarray, translation: np.ndarray) -> "EmbeddedTree":
        """Apply a rigid motion (used by equivariance checks)."""
        pos = self.positions @ rotation.T + translation
        edges = tuple(replace(e, direction=rotation @ e.direction) for e in self.edges)
        return replace(self, positions=pos, edges=edges, offset=self.offset + 0.0)


def embedded_tree_from_positions(
    positions: np.ndarray,
    edge_list: Sequence[tuple[int, int]],
    external: Sequence[bool] | None = None,
    scale: float = 1.0,
    name: str = "synthetic",
) -> EmbeddedTree:
    """Build a tree directly from geometry (directions default to the
    displacement vectors); used for synthetic test trees."""
    positions = np.asarray(positions, dtype=float)
    ext = list(external) if external is not None else [False] * len(edge_list)
    edges = []
    for i, (a, b) in enumerate(edge_list):
        edges.append(TreeEdge(a, b, positions[b] - positions[a], ext[i], f"e{i}"))
    ext_idx = tuple(i for i, e in enumerate(edges) if e.external)
    return EmbeddedTree(
        positions,
        tuple(edges),
        np.zeros(positions.shape[1]),
        scale,
        tuple(f"v{i}" for i in range(positions.shape[0])),
        ext_idx,
        name,
    )


def embed_trees(
    forest: CutForest,
    omega: BalancedCocycle,
    u_matrix: np.ndarray,
    scale: float = DEFAULT_SCALE,
    tree: SpanningTreeData | None = None,
) -> list[EmbeddedTree]:
    """Embed each cut component in good coordinates at the given scale.

    Vertices sit at scale * U * f(v) relative to the component's own base
    (its lowest-id vertex); each stub becomes a full-length external edge in
    direction scale * U * omega(stub half).
    """
    g = forest.graph
    t = tree if tree is not None else spanning_tree(g, forest.lam, 0)
    f = vertex_potentials(g, t, forest.lam, omega, t.root)
    good = scale * (f @ u_matrix.T)
    coords = omega.values @ u_matrix.T  # row h = U omega(h)

    out: list[EmbeddedTree] = []
    for ti, ct in enumerate(forest.trees):
        base = min(ct.vertices)
        local = {v: i for i, v in enumerate(ct.vertices)}
        n_int = len(ct.vertices)
        positions = [good[v] - good[base] for v in ct.vertices]
        edges: list[TreeEdge] = []
        for k in ct.internal_edges:
            h = 2 * k
            direction = scale * coords[h]
            edges.append(TreeEdge(local[g.source(h)], local[g.target(h)], direction, False, g.edge_names[k]))
        ext_idx = []
        for si, h in enumerate(ct.stubs):
            direction = scale * coords[h]
            full = forest.lam.edge_length(h // 2)  # doubled half = full edge
            leaf_pos = positions[local[g.source(h)]] + full * direction
            leaf = n_int + si
            positions.append(leaf_pos)
            ext_idx.append(len(edges))
            side = "+" if h % 2 == 0 else "-"
            edges.append(TreeEdge(local[g.source(h)], leaf, direction, True, f"{g.edge_names[h // 2]}{side}"))
        labels = tuple(g.vertex_names[v] for v in ct.vertices) + tuple(
            f"cut:{e.label}" for e in (edges[i] for i in ext_idx)
        )
        out.append(
            EmbeddedTree(
                np.array(positions).reshape(len(positions), omega.dim),
                tuple(edges),
                good[base].copy(),
                scale,
                labels,
                tuple(ext_idx),
                name=f"tree{ti}",
            )
        )
    return out


def glue_translation(tree_a: EmbeddedTree, edge_a: int, tree_b: EmbeddedTree, edge_b: int) -> np.ndarray:
    """Deck translation tau with x_a = x_b + tau along a glued pair, where
    the two external edges are the doubled halves of one cut edge."""
    ea, eb = tree_a.edges[edge_a], tree_b.edges[edge_b]
    pa = tree_a.offset + tree_a.positions[ea.src]
    pb = tree_b.offset + tree_b.positions[eb.src]
    da = tree_a.positions[ea.dst] - tree_a.positions[ea.src]
    return pa + da - pb


def check_tautness(tree: EmbeddedTree, tol: float = GEOMETRIC_TOL, min_external: float = 4.0) -> Report:
    """The three taut conditions plus the external length bound.

    (1) at each internal vertex the outgoing direction vectors sum to zero
        (these norms are the positive weights making the unit vectors
        balance);
    (2) no bivalent vertices;
    (3) any two segments of an embedded path have nonnegative dot product.
    """
    report = Report()
    val = tree.valences()
    internal = [v for v in range(tree.n_vertices) if val[v] >= 2]

    worst1 = 0.0
    where1 = ""
    for v in internal:
        s = np.zeros(tree.dim)
        for e in tree.edges:
            if e.src == v:
                s = s + e.direction
            if e.dst == v:
                s = s - e.direction
        r = float(np.max(np.abs(s))) if tree.dim else 0.0
        if r > worst1:
            worst1, where1 = r, tree.vertex_labels[v]
    report.add("vertex_balance_of_directions", worst1 <= tol, worst1, where1)

    bivalent = [tree.vertex_labels[v] for v in range(tree.n_vertices) if val[v] == 2]
    report.add("no_bivalent_vertices", not bivalent, float(len(bivalent)), ",".join(bivalent))

    # Directed segments: for each (directed) edge, every directed edge
    # reachable ahead of it lies on a common embedded path.
    disp = [tree.displacement(i) for i in range(len(tree.edges))]
    active = [i for i in range(len(tree.edges)) if np.linalg.norm(disp[i]) > STRUCTURAL_TOL]
    out_at: list[list[tuple[int, int]]] = [[] for _ in range(tree.n_vertices)]  # (edge, sign)
    for i, e in enumerate(tree.edges):
        out_at[e.src].append((i, +1))
        out_at[e.dst].append((i, -1))

    worst3 = np.inf
    where3 = ""
    for i in active:
        for sign in (+1, -1):
            d0 = sign * disp[i]
            head = tree.edges[i].dst if sign > 0 else tree.edges[i].src
            stack = [(head, i)]
            while stack:
                v, came = stack.pop()
                for j, s2 in out_at[v]:
                    if j == came:
                        continue
                    nxt = tree.edges[j].dst if s2 > 0 else tree.edges[j].src
                    stack.append((nxt, j))
                    if j in set(active):
                        d = float(d0 @ (s2 * disp[j]))
                        if d < worst3:
                            worst3, where3 = d, f"{tree.edges[i].label}->{tree.edges[j].label}"
    if worst3 == np.inf:
        worst3 = 0.0
    report.add("path_segments_nonnegative_dot", worst3 >= -tol, worst3, where3)

    short_ext = []
    worst_len = np.inf
    for i in tree.external_edges:
        length = float(np.linalg.norm(disp[i]))
        worst_len = min(worst_len, length)
        if length < min_external - tol:
            short_ext.append(tree.edges[i].label)
    if worst_len == np.inf:
        worst_len = 0.0
    report.add("external_edges_long_enough", not short_ext, worst_len, ",".join(short_ext))
    return report
