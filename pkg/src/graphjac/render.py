"""CSV and SVG artifact writers.

All writers return strings; float formatting goes through repr() of Python
floats so identical inputs produce identical bytes.
"""

from __future__ import annotations

import numpy as np

from .immersion import ImmersedGraph
from .period import BalancedCocycle
from .thickening import RegionResult


def _fmt(x: float) -> str:
    return repr(float(x))


def cocycle_csv(omega: BalancedCocycle) -> str:
    header = "half_edge_id," + ",".join(f"coord_{i + 1}" for i in range(omega.dim))
    lines = [header]
    for h in range(omega.graph.n_half_edges):
        lines.append(f"{h}," + ",".join(_fmt(x) for x in omega.values[h]))
    return "\n".join(lines) + "\n"


def potentials_csv(im: ImmersedGraph) -> str:
    r = im.rank
    header = "vertex," + ",".join(f"raw_{i + 1}" for i in range(r)) + "," + ",".join(
        f"good_{i + 1}" for i in range(r)
    )
    good = im.good_potentials()
    lines = [header]
    for v in range(im.graph.n_vertices):
        raw = ",".join(_fmt(x) for x in im.potentials[v])
        gd = ",".join(_fmt(x) for x in good[v])
        lines.append(f"{im.graph.vertex_names[v]},{raw},{gd}")
    return "\n".join(lines) + "\n"


def segments_csv(im: ImmersedGraph) -> str:
    r = im.rank
    header = (
        "edge,"
        + ",".join(f"start_{i + 1}" for i in range(r))
        + ","
        + ",".join(f"disp_{i + 1}" for i in range(r))
    )
    lines = [header]
    for seg in im.segments:
        start = ",".join(_fmt(x) for x in seg.start)
        disp = ",".join(_fmt(x) for x in seg.displacement)
        lines.append(f"{im.graph.edge_names[seg.edge]},{start},{disp}")
    return "\n".join(lines) + "\n"


def _wrap_segment(p: np.ndarray, q: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split the segment p -> q into pieces inside the unit square mod 1."""
    pieces = []
    d = q - p
    breaks = [0.0, 1.0]
    for axis in range(2):
        if abs(d[axis]) < 1e-15:
            continue
        lo = np.floor(min(p[axis], q[axis]))
        hi = np.ceil(max(p[axis], q[axis]))
        for c in np.arange(lo, hi + 1):
            s = (c - p[axis]) / d[axis]
            if 0.0 < s < 1.0:
                breaks.append(float(s))
    breaks = sorted(set(breaks))
    for s0, s1 in zip(breaks[:-1], breaks[1:]):
        mid = p + 0.5 * (s0 + s1) * d
        shift = np.floor(mid)
        a = p + s0 * d - shift
        b = p + s1 * d - shift
        pieces.append((a, b))
    return pieces


def immersion_svg(im: ImmersedGraph, size: int = 480) -> str:
    """Rank-2 fundamental domain [0,1)^2 with the wrapped edge segments."""
    if im.rank != 2:
        raise ValueError("SVG export is implemented for rank 2 only")

    def xy(p: np.ndarray) -> tuple[float, float]:
        return (p[0] * size, (1.0 - p[1]) * size)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white" stroke="black"/>',
    ]
    for seg in im.segments:
        p = np.asarray(seg.start, dtype=float)
        q = p + np.asarray(seg.displacement, dtype=float)
        for a, b in _wrap_segment(p, q):
            (x1, y1), (x2, y2) = xy(a), xy(b)
            parts.append(
                f'<line x1="{x1:.3f}" y1="{y1:.3f}" x2="{x2:.3f}" y2="{y2:.3f}" '
                f'stroke="steelblue" stroke-width="2"/>'
            )
    for v in range(im.graph.n_vertices):
        p = np.mod(im.potentials[v], 1.0)
        x, y = xy(p)
        parts.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="3" fill="crimson"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def region_svg(result: RegionResult, size: int = 480) -> str:
    """Fundamental parallelogram with the extracted boundary polylines."""
    lattice = result.lattice
    corners = np.array([[0, 0], [1, 0], [1, 1], [0, 1]]) @ lattice.T
    lo = corners.min(axis=0)
    hi = corners.max(axis=0)
    span = float(max(hi - lo))

    def xy(p: np.ndarray) -> tuple[float, float]:
        q = (p - lo) / span
        return (q[0] * size, (1.0 - q[1]) * size)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
    ]
    pts = " ".join(f"{xy(c)[0]:.3f},{xy(c)[1]:.3f}" for c in corners)
    parts.append(f'<polygon points="{pts}" fill="none" stroke="black" stroke-dasharray="4 3"/>')
    for loop in result.boundary_loops:
        pts = " ".join(f"{xy(p)[0]:.3f},{xy(p)[1]:.3f}" for p in loop)
        parts.append(f'<polygon points="{pts}" fill="none" stroke="seagreen" stroke-width="1.5"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def boundary_csv(result: RegionResult) -> str:
    lines = ["loop,point,x,y"]
    for li, loop in enumerate(result.boundary_loops):
        for pi, p in enumerate(loop):
            lines.append(f"{li},{pi},{_fmt(p[0])},{_fmt(p[1])}")
    return "\n".join(lines) + "\n"


def field_grid_csv(result: RegionResult) -> str:
    n1, n2 = result.grid_shape
    header = f"# nx={n1} ny={n2} h={_fmt(1.0 / n1)},{_fmt(1.0 / n2)} origin=0,0 (lattice fractions)"
    lines = [header, "i,j,phi"]
    for i in range(n1):
        for j in range(n2):
            lines.append(f"{i},{j},{_fmt(result.values[i, j])}")
    return "\n".join(lines) + "\n"
