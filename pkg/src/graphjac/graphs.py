"""Half-edge graphs, length functions, spanning trees and collapses.

A graph is stored as a fixed-point-free involution on dense half-edge ids
together with a target map.  Edge k owns half-edges 2k and 2k+1; the
involution is the xor with 1, so it never needs to be stored.  Half-edge 2k
points from the listed source vertex to the listed target vertex.

Edge lengths are the canonical unit (the full edge length in [0, 1]); the
half-edge length is half of that.  A length function is valid when every
embedded cycle carries a full-length edge, which is checked as: the edges
of non-maximal length form a forest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .reporting import Report

STRUCTURAL_TOL = 1e-12
GEOMETRIC_TOL = 1e-9


class GraphFormatError(ValueError):
    """Malformed graph document (bad references, duplicate ids, wrong shape)."""


@dataclass(frozen=True)
class Graph:
    """Finite graph with unoriented edges given by half-edge pairs.

    half_target[h] is the vertex that half-edge h points into; the source of
    h is the target of its mate h ^ 1.  Loops are allowed.
    """

    vertex_names: tuple[str, ...]
    edge_names: tuple[str, ...]
    half_target: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.half_target) != 2 * len(self.edge_names):
            raise GraphFormatError("half_target must list two half-edges per edge")
        for h, v in enumerate(self.half_target):
            if not 0 <= v < len(self.vertex_names):
                raise GraphFormatError(f"half-edge {h} targets unknown vertex {v}")

    # --- basic accessors -------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertex_names)

    @property
    def n_edges(self) -> int:
        return len(self.edge_names)

    @property
    def n_half_edges(self) -> int:
        return 2 * self.n_edges

    def mate(self, h: int) -> int:
        return h ^ 1

    def target(self, h: int) -> int:
        return self.half_target[h]

    def source(self, h: int) -> int:
        return self.half_target[h ^ 1]

    def edge_of(self, h: int) -> int:
        return h // 2

    def halves(self, k: int) -> tuple[int, int]:
        return 2 * k, 2 * k + 1

    def endpoints(self, k: int) -> tuple[int, int]:
        """(source, target) of the forward half-edge 2k."""
        return self.half_target[2 * k + 1], self.half_target[2 * k]

    def is_loop(self, k: int) -> bool:
        u, v = self.endpoints(k)
        return u == v

    def valences(self) -> np.ndarray:
        val = np.zeros(self.n_vertices, dtype=int)
        for v in self.half_target:
            val[v] += 1
        return val

    def half_edges_into(self, v: int) -> list[int]:
        return [h for h in range(self.n_half_edges) if self.half_target[h] == v]

    def half_edges_out_of(self, v: int) -> list[int]:
        return [h for h in range(self.n_half_edges) if self.half_target[h ^ 1] == v]

    def adjacency(self) -> list[list[int]]:
        """Per-vertex list of outgoing half-edges."""
        out: list[list[int]] = [[] for _ in range(self.n_vertices)]
        for h in range(self.n_half_edges):
            out[self.source(h)].append(h)
        return out

    def is_connected(self) -> bool:
        if self.n_vertices == 0:
            return False
        adj = self.adjacency()
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for h in adj[v]:
                w = self.target(h)
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n_vertices


@dataclass(frozen=True)
class LengthFunction:
    """Symmetric edge lengths; edge_lengths[k] is the full length of edge k."""

    edge_lengths: tuple[float, ...]

    def edge_length(self, k: int) -> float:
        return self.edge_lengths[k]

    def half_length(self, h: int) -> float:
        return self.edge_lengths[h // 2] / 2.0

    def is_long(self, k: int) -> bool:
        return self.edge_lengths[k] >= 1.0 - STRUCTURAL_TOL

    def long_edges(self) -> list[int]:
        return [k for k in range(len(self.edge_lengths)) if self.is_long(k)]

    @property
    def nondegenerate(self) -> bool:
        return all(l > STRUCTURAL_TOL for l in self.edge_lengths)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.edge_lengths, dtype=float)


def unit_lengths(g: Graph) -> LengthFunction:
    return LengthFunction(tuple(1.0 for _ in range(g.n_edges)))


@dataclass(frozen=True)
class OrientedCycle:
    """Closed path of half-edges; target of each equals source of the next."""

    half_edges: tuple[int, ...]

    def validate(self, g: Graph) -> None:
        hs = self.half_edges
        if not hs:
            raise ValueError("a cycle needs at least one half-edge")
        for i, h in enumerate(hs):
            nxt = hs[(i + 1) % len(hs)]
            if g.target(h) != g.source(nxt):
                raise ValueError(f"path breaks between positions {i} and {i + 1}")

    def incidence_vector(self, n_edges: int) -> np.ndarray:
        """Signed edge incidence a(E) in {-1, 0, +1} (simple cycles)."""
        vec = np.zeros(n_edges, dtype=int)
        for h in self.half_edges:
            vec[h // 2] += 1 if h % 2 == 0 else -1
        return vec


@dataclass(frozen=True)
class SpanningTreeData:
    """A maximal tree plus one chosen half-edge per non-tree edge.

    parent_half[v] is the tree half-edge pointing from the parent of v into
    v (None at the root).  Chords are the forward halves of the non-tree
    edges in ascending edge order.
    """

    tree_edges: frozenset[int]
    root: int
    parent_half: tuple[int | None, ...]
    depth: tuple[int, ...]
    chords: tuple[int, ...]

    @property
    def rank(self) -> int:
        return len(self.chords)


@dataclass(frozen=True)
class Morphism:
    """Collapsing morphism: bijective on surviving half-edges, vertex
    preimages are trees.  edge_map[k] is the image edge index or None for a
    collapsed edge, in which case the whole edge maps to vertex_map of its
    endpoints."""

    vertex_map: tuple[int, ...]
    edge_map: tuple[int | None, ...]

    @property
    def collapsed_edges(self) -> tuple[int, ...]:
        return tuple(k for k, img in enumerate(self.edge_map) if img is None)


# --- parsing -------------------------------------------------------------


def graph_from_dict(doc: dict) -> Graph:
    """Build a Graph from {"vertices": [...], "edges": [{id, source, target, length}]}.

    Vertices and edges are indexed in sorted-name order so documents that
    list the same graph in a different order produce identical ids.
    """
    try:
        vertex_list = list(doc["vertices"])
        edge_list = list(doc["edges"])
    except (KeyError, TypeError) as exc:
        raise GraphFormatError("document must have 'vertices' and 'edges'") from exc
    if len(set(vertex_list)) != len(vertex_list):
        raise GraphFormatError("duplicate vertex ids")
    vertex_names = tuple(sorted(str(v) for v in vertex_list))
    vidx = {name: i for i, name in enumerate(vertex_names)}

    by_name: dict[str, tuple[str, str]] = {}
    for entry in edge_list:
        try:
            name = str(entry["id"])
            src = str(entry["source"])
            dst = str(entry["target"])
        except (KeyError, TypeError) as exc:
            raise GraphFormatError(f"malformed edge entry {entry!r}") from exc
        if name in by_name:
            raise GraphFormatError(f"duplicate edge id {name!r}")
        for v in (src, dst):
            if v not in vidx:
                raise GraphFormatError(f"edge {name!r} references missing vertex {v!r}")
        by_name[name] = (src, dst)

    edge_names = tuple(sorted(by_name))
    half_target: list[int] = []
    for name in edge_names:
        src, dst = by_name[name]
        half_target.append(vidx[dst])  # forward half 2k points into the target
        half_target.append(vidx[src])
    return Graph(vertex_names, edge_names, tuple(half_target))


def lengths_from_dict(doc: dict, g: Graph) -> LengthFunction:
    raw = {str(e["id"]): float(e.get("length", 1.0)) for e in doc["edges"]}
    return LengthFunction(tuple(raw[name] for name in g.edge_names))


def parse_graph(text: str) -> Graph:
    return graph_from_dict(json.loads(text))


def parse_document(text: str) -> tuple[Graph, LengthFunction]:
    doc = json.loads(text)
    g = graph_from_dict(doc)
    return g, lengths_from_dict(doc, g)


# --- structural operations -----------------------------------------------


def validate_shape(g: Graph, require_gr: bool = False) -> Report:
    """Connectivity / valence / involution report; with require_gr the graph
    must be connected with all valences >= 3."""
    report = Report()
    report.add("involution_fixed_point_free", True, 0.0)
    connected = g.is_connected()
    report.add("connected", connected or not require_gr, location="" if connected else "graph disconnected")
    if not connected:
        report.items[-1].status = "fail" if require_gr else "info"
    val = g.valences()
    min_val = int(val.min()) if len(val) else 0
    if require_gr:
        bad = [g.vertex_names[v] for v in np.nonzero(val < 3)[0]]
        report.add("valence_at_least_3", not bad, float(min_val), location=",".join(bad))
    else:
        report.info("min_valence", float(min_val))
    report.info("valences", None, location=",".join(str(int(x)) for x in val))
    return report


def rank(g: Graph) -> int:
    """dim H_1 = #edges - #vertices + 1 for a connected graph."""
    if not g.is_connected():
        raise ValueError("rank is defined here only for connected graphs")
    return g.n_edges - g.n_vertices + 1


def separating_edges(g: Graph) -> set[int]:
    """Bridge edges found by one DFS (lowpoint method on the multigraph)."""
    adj = g.adjacency()
    n = g.n_vertices
    disc = [-1] * n
    low = [0] * n
    bridges: set[int] = set()
    counter = 0
    for start in range(n):
        if disc[start] != -1:
            continue
        stack: list[tuple[int, int | None, Iterable[int]]] = [(start, None, iter(adj[start]))]
        disc[start] = low[start] = counter
        counter += 1
        while stack:
            v, in_half, it = stack[-1]
            advanced = False
            for h in it:
                if in_half is not None and h == (in_half ^ 1):
                    continue  # do not reuse the entering edge; parallels are fine
                w = g.target(h)
                if disc[w] == -1:
                    disc[w] = low[w] = counter
                    counter += 1
                    stack.append((w, h, iter(adj[w])))
                    advanced = True
                    break
                low[v] = min(low[v], disc[w])
            if not advanced:
                stack.pop()
                if stack:
                    parent = stack[-1][0]
                    low[parent] = min(low[parent], low[v])
                    if in_half is not None and low[v] > disc[parent]:
                        bridges.add(in_half // 2)
    return bridges


class _UnionFind:
    def __init__(self, n: int) -> None:
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def validate_length_function(g: Graph, lam: LengthFunction) -> Report:
    """Symmetry / range / cycle condition.  The cycle condition is that the
    edges of length < 1 contain no cycle, equivalent to every embedded cycle
    carrying a full-length edge."""
    report = Report()
    report.add("entry_count", len(lam.edge_lengths) == g.n_edges, float(len(lam.edge_lengths)))
    report.add("symmetric_by_storage", True, 0.0)
    lo = min(lam.edge_lengths) if lam.edge_lengths else 0.0
    hi = max(lam.edge_lengths) if lam.edge_lengths else 0.0
    in_range = lo >= -STRUCTURAL_TOL and hi <= 1.0 + STRUCTURAL_TOL
    report.add("range_0_1", in_range, float(min(lo, 1.0 - hi)))
    uf = _UnionFind(g.n_vertices)
    witness = None
    for k in range(g.n_edges):
        if lam.is_long(k):
            continue
        u, v = g.endpoints(k)
        if u == v or not uf.union(u, v):
            witness = g.edge_names[k]
            break
    report.add(
        "every_cycle_has_full_length_edge",
        witness is None,
        location="" if witness is None else f"short-edge cycle through {witness}",
    )
    report.info("nondegenerate", 1.0 if lam.nondegenerate else 0.0)
    return report


def spanning_tree(g: Graph, lam: LengthFunction, v0: int = 0) -> SpanningTreeData:
    """Maximal tree containing every edge of less than maximal length.

    Short edges enter first (ascending edge id); full-length edges are then
    offered in descending id so that the chords -- the future cycle basis --
    take the smallest available ids.  Loops never join components and are
    always chords.
    """
    check = validate_length_function(g, lam)
    if not check.ok:
        raise ValueError("invalid length function: " + "; ".join(i.check for i in check.failures()))
    if not g.is_connected():
        raise ValueError("spanning tree requires a connected graph")
    if not 0 <= v0 < g.n_vertices:
        raise ValueError(f"base vertex {v0} out of range")

    shorts = [k for k in range(g.n_edges) if not lam.is_long(k)]
    longs = [k for k in range(g.n_edges) if lam.is_long(k)]
    uf = _UnionFind(g.n_vertices)
    tree: set[int] = set()
    for k in shorts + longs[::-1]:
        u, v = g.endpoints(k)
        if u != v and uf.union(u, v):
            tree.add(k)

    # Orient the tree from v0.
    adj: list[list[int]] = [[] for _ in range(g.n_vertices)]
    for k in tree:
        for h in g.halves(k):
            adj[g.source(h)].append(h)
    parent_half: list[int | None] = [None] * g.n_vertices
    depth = [0] * g.n_vertices
    seen = {v0}
    queue = [v0]
    while queue:
        v = queue.pop(0)
        for h in adj[v]:
            w = g.target(h)
            if w not in seen:
                seen.add(w)
                parent_half[w] = h
                depth[w] = depth[v] + 1
                queue.append(w)

    chords = tuple(2 * k for k in range(g.n_edges) if k not in tree)
    return SpanningTreeData(frozenset(tree), v0, tuple(parent_half), tuple(depth), chords)


def tree_path(g: Graph, t: SpanningTreeData, a: int, b: int) -> list[int]:
    """Half-edges of the unique tree path from vertex a to vertex b."""
    up_a: list[int] = []
    up_b: list[int] = []
    da, db = t.depth[a], t.depth[b]
    while da > db:
        h = t.parent_half[a]
        assert h is not None
        up_a.append(h ^ 1)  # walk from a up to its parent
        a = g.source(h)
        da -= 1
    while db > da:
        h = t.parent_half[b]
        assert h is not None
        up_b.append(h ^ 1)
        b = g.source(h)
        db -= 1
    while a != b:
        ha, hb = t.parent_half[a], t.parent_half[b]
        assert ha is not None and hb is not None
        up_a.append(ha ^ 1)
        up_b.append(hb ^ 1)
        a, b = g.source(ha), g.source(hb)
    return up_a + [h ^ 1 for h in reversed(up_b)]


def cycle_basis(g: Graph, t: SpanningTreeData) -> list[OrientedCycle]:
    """Fundamental cycles: chord e_i followed by the tree path tau(e_i) -> sigma(e_i)."""
    cycles = []
    for h in t.chords:
        cyc = OrientedCycle(tuple([h] + tree_path(g, t, g.target(h), g.source(h))))
        cyc.validate(g)
        cycles.append(cyc)
    return cycles


def chord_coefficients(g: Graph, t: SpanningTreeData) -> np.ndarray:
    """(2m, r) integer matrix C with C[h, i] = coefficient of chord i in the
    unique balanced cocycle value at half-edge h (i.e. signed membership of
    h in the i-th fundamental cycle)."""
    coeff = np.zeros((g.n_half_edges, t.rank), dtype=int)
    for i, cyc in enumerate(cycle_basis(g, t)):
        for h in cyc.half_edges:
            coeff[h, i] += 1
            coeff[h ^ 1, i] -= 1
    return coeff


def collapse(g: Graph, forest: Iterable[int]) -> tuple[Graph, Morphism]:
    """Collapse a forest of edges; surviving edges keep their names.

    Raises ValueError if the given edge set contains a cycle (that would
    change the rank, so it is not a collapsing morphism).
    """
    forest = sorted(set(forest))
    uf = _UnionFind(g.n_vertices)
    for k in forest:
        if not 0 <= k < g.n_edges:
            raise ValueError(f"edge index {k} out of range")
        u, v = g.endpoints(k)
        if u == v or not uf.union(u, v):
            raise ValueError(f"edge set contains a cycle through {g.edge_names[k]}")

    roots = sorted({uf.find(v) for v in range(g.n_vertices)})
    new_index = {root: i for i, root in enumerate(roots)}
    vertex_map = tuple(new_index[uf.find(v)] for v in range(g.n_vertices))
    new_vertex_names = tuple(g.vertex_names[root] for root in roots)

    surviving = [k for k in range(g.n_edges) if k not in set(forest)]
    edge_map: list[int | None] = [None] * g.n_edges
    new_edge_names = []
    half_target: list[int] = []
    for new_k, k in enumerate(surviving):
        edge_map[k] = new_k
        new_edge_names.append(g.edge_names[k])
        half_target.append(vertex_map[g.target(2 * k)])
        half_target.append(vertex_map[g.target(2 * k + 1)])

    quotient = Graph(new_vertex_names, tuple(new_edge_names), tuple(half_target))
    return quotient, Morphism(vertex_map, tuple(edge_map))


def induced_lengths(morphism: Morphism, lam: LengthFunction, quotient: Graph) -> LengthFunction:
    """Push a length function through a collapse (surviving edges keep theirs)."""
    out = [0.0] * quotient.n_edges
    for k, img in enumerate(morphism.edge_map):
        if img is not None:
            out[img] = lam.edge_lengths[k]
    return LengthFunction(tuple(out))
