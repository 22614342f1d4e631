"""Independent brute-force oracles and random graph generators.

Everything here deliberately avoids the package's own spanning-tree /
period-matrix machinery so the tests compare two genuinely different
computation routes.
"""

from __future__ import annotations

from itertools import combinations

import numpy as np

from graphjac.graphs import Graph, LengthFunction


def edge_subgraph_degrees(g: Graph, edges: set[int]) -> dict[int, int]:
    deg: dict[int, int] = {}
    for k in edges:
        u, v = g.endpoints(k)
        deg[u] = deg.get(u, 0) + 1
        deg[v] = deg.get(v, 0) + 1
    return deg


def _edges_connected(g: Graph, edges: set[int]) -> bool:
    if not edges:
        return False
    verts = set()
    for k in edges:
        verts.update(g.endpoints(k))
    adj: dict[int, set[int]] = {v: set() for v in verts}
    for k in edges:
        u, v = g.endpoints(k)
        adj[u].add(v)
        adj[v].add(u)
    start = next(iter(verts))
    seen = {start}
    stack = [start]
    while stack:
        v = stack.pop()
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen == verts


def brute_embedded_cycles(g: Graph) -> list[set[int]]:
    """All embedded (simple) cycles as edge sets: connected subgraphs where
    every vertex has degree exactly 2 (a loop counts twice)."""
    out = []
    for size in range(1, g.n_edges + 1):
        for subset in combinations(range(g.n_edges), size):
            edges = set(subset)
            deg = edge_subgraph_degrees(g, edges)
            if all(d == 2 for d in deg.values()) and _edges_connected(g, edges):
                out.append(edges)
    return out


def brute_bridges(g: Graph) -> set[int]:
    """Bridges by deletion: edge k separates iff removing it disconnects."""
    bridges = set()
    for k in range(g.n_edges):
        if g.is_loop(k):
            continue
        adj: list[list[int]] = [[] for _ in range(g.n_vertices)]
        for j in range(g.n_edges):
            if j == k:
                continue
            u, v = g.endpoints(j)
            adj[u].append(v)
            adj[v].append(u)
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in adj[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(seen) != g.n_vertices:
            bridges.add(k)
    return bridges


def brute_valid_lengths(g: Graph, lam: LengthFunction) -> bool:
    """Cycle condition by enumerating every embedded cycle."""
    for cycle in brute_embedded_cycles(g):
        if not any(lam.is_long(k) for k in cycle):
            return False
    return True


def brute_canonical_cocycle(g: Graph, lam: LengthFunction, cycles: list[tuple[int, ...]]) -> np.ndarray:
    """Least-squares solve for the canonical cocycle straight from the
    definition: antisymmetry + balance + weighted cycle integrals equal to
    the identity.  cycles lists the basis as half-edge tuples.

    Unknowns are the 2m half-edge values (r columns); no chord-restriction
    or Gram-matrix structure is used.
    """
    m2 = g.n_half_edges
    r = len(cycles)
    rows = []
    rhs = []
    for h in range(0, m2, 2):
        row = np.zeros(m2)
        row[h] = 1.0
        row[h + 1] = 1.0
        rows.append(row)
        rhs.append(np.zeros(r))
    for v in range(g.n_vertices):
        row = np.zeros(m2)
        for h in g.half_edges_into(v):
            row[h] += 1.0
        rows.append(row)
        rhs.append(np.zeros(r))
    for j, cyc in enumerate(cycles):
        row = np.zeros(m2)
        for h in cyc:
            row[h] += 2.0 * lam.half_length(h)
        rows.append(row)
        e = np.zeros(r)
        e[j] = 1.0
        rhs.append(e)
    a = np.array(rows)
    b = np.array(rhs)
    sol, residual, *_ = np.linalg.lstsq(a, b, rcond=None)
    assert np.max(np.abs(a @ sol - b)) < 1e-9, "oracle system inconsistent"
    return sol


def random_connected_graph(rng: np.random.Generator, max_vertices: int = 6, extra_edges: int = 4,
                           allow_loops: bool = True) -> Graph:
    n = int(rng.integers(1, max_vertices + 1))
    names = tuple(f"v{i}" for i in range(n))
    edges: list[tuple[int, int]] = []
    order = rng.permutation(n)
    for i in range(1, n):
        j = int(rng.integers(0, i))
        edges.append((int(order[j]), int(order[i])))
    n_extra = int(rng.integers(1, extra_edges + 1))
    for _ in range(n_extra):
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        if not allow_loops and u == v:
            v = (v + 1) % n if n > 1 else v
        edges.append((u, v))
    edge_names = tuple(f"e{i:02d}" for i in range(len(edges)))
    half_target: list[int] = []
    for u, v in edges:
        half_target.append(v)
        half_target.append(u)
    return Graph(names, edge_names, tuple(half_target))


def make_bridgeless(g: Graph) -> Graph:
    """Double every bridge (a parallel copy kills it)."""
    bridges = brute_bridges(g)
    if not bridges:
        return g
    edges = list(zip(g.half_target[1::2], g.half_target[0::2]))  # (source, target)
    for k in sorted(bridges):
        edges.append(edges[k])
    names = tuple(f"e{i:02d}" for i in range(len(edges)))
    half_target: list[int] = []
    for u, v in edges:
        half_target.append(v)
        half_target.append(u)
    out = Graph(g.vertex_names, names, tuple(half_target))
    return out if not brute_bridges(out) else make_bridgeless(out)


def random_valid_lengths(rng: np.random.Generator, g: Graph) -> LengthFunction:
    """Valid by construction: the short edges are a subset of a spanning
    forest, every chord is full length."""
    parent = list(range(g.n_vertices))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    lengths = [1.0] * g.n_edges
    order = rng.permutation(g.n_edges)
    for k in order:
        u, v = g.endpoints(int(k))
        if u != v and find(u) != find(v):
            parent[find(u)] = find(v)
            roll = rng.random()
            if roll < 0.4:
                lengths[int(k)] = float(rng.uniform(0.15, 0.95))
            elif roll < 0.5:
                lengths[int(k)] = 0.0
    return LengthFunction(tuple(lengths))
