"""Command-line surface: validate, cocycle, embed, cut, thicken, verify, family.

Reports are JSON with the stable item schema {check, status, worst_margin,
location}; a human summary goes to stdout.  Exit status is 0 exactly when
every requested check passed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import family as family_mod
from . import render
from .graphs import parse_document, rank, separating_edges, spanning_tree, validate_length_function, validate_shape
from .immersion import check_local_embedding, check_tautness, cut_long_edges, embed_trees, torus_immersion
from .period import (
    balance_report,
    canonical_cocycle,
    check_nonsingular,
    coefficient_structure_report,
    good_metric,
    lambda_star_identity_report,
    sign_condition_report,
)
from .reporting import Report
from .thickening import (
    GridConfig,
    KeyLemmaConfig,
    ThickeningField,
    formula_agreement_report,
    gradient_fd_report,
    leaf_standardness_report,
    pasting_report,
    subdivision_report,
    sublevel_region,
    verify_psi,
)


def _read_graph(path: str):
    return parse_document(Path(path).read_text())


def _emit(report: Report, args, command: str, artifacts: dict[str, str] | None = None) -> int:
    for line in report.summary_lines():
        print(line)
    payload = report.to_json(command=command, seed=getattr(args, "seed", None), artifacts=artifacts or {})
    if args.out:
        Path(args.out).write_text(payload + "\n")
        print(f"report written to {args.out}")
    status = 0 if report.ok else 1
    print(f"{command}: {'OK' if status == 0 else 'FAILED'}")
    return status


def _cmd_validate(args) -> int:
    g, lam = _read_graph(args.input)
    report = Report()
    report.extend(validate_shape(g, require_gr=args.require_gr0))
    report.extend(validate_length_function(g, lam))
    if args.require_gr0:
        bridges = separating_edges(g)
        report.add(
            "no_separating_edges",
            not bridges,
            float(len(bridges)),
            ",".join(g.edge_names[k] for k in sorted(bridges)),
        )
    report.info("rank", float(rank(g)) if g.is_connected() else None)
    return _emit(report, args, "validate")


def _cmd_cocycle(args) -> int:
    g, lam = _read_graph(args.input)
    t = spanning_tree(g, lam, 0)
    omega = canonical_cocycle(g, lam, t)
    report = Report()
    report.extend(balance_report(omega, tol=args.tol_structural))
    report.extend(check_nonsingular(omega, zero_tol=args.tol_geometric))
    artifacts = {}
    if args.out_csv:
        Path(args.out_csv).write_text(render.cocycle_csv(omega))
        artifacts["cocycle_csv"] = args.out_csv
    return _emit(report, args, "cocycle", artifacts)


def _cmd_embed(args) -> int:
    g, lam = _read_graph(args.input)
    im = torus_immersion(g, lam)
    report = check_local_embedding(im)
    artifacts = {}
    if args.out_csv:
        Path(args.out_csv).write_text(render.potentials_csv(im) + render.segments_csv(im))
        artifacts["csv"] = args.out_csv
    if args.out_svg:
        if im.rank == 2:
            Path(args.out_svg).write_text(render.immersion_svg(im))
            artifacts["svg"] = args.out_svg
        else:
            report.info("svg_skipped_rank_not_2", float(im.rank))
    return _emit(report, args, "embed", artifacts)


def _build_thickening(g, lam, scale: float = 4.0):
    t = spanning_tree(g, lam, 0)
    omega = canonical_cocycle(g, lam, t)
    metric = good_metric(g, t, omega, lam)
    forest = cut_long_edges(g, lam)
    trees = embed_trees(forest, omega, metric.u_matrix, scale=scale, tree=t)
    lattice = scale * metric.u_matrix
    return t, omega, metric, forest, trees, lattice


def _cmd_cut(args) -> int:
    g, lam = _read_graph(args.input)
    t, omega, metric, forest, trees, _ = _build_thickening(g, lam)
    report = Report()
    doc = {"cut_edges": [g.edge_names[k] for k in forest.cut_edges], "trees": []}
    for ct, tree in zip(forest.trees, trees):
        report.extend(check_tautness(tree))
        doc["trees"].append(
            {
                "name": tree.name,
                "vertices": [g.vertex_names[v] for v in ct.vertices],
                "internal_edges": [g.edge_names[k] for k in ct.internal_edges],
                "stubs": [f"{g.edge_names[h // 2]}{'+' if h % 2 == 0 else '-'}" for h in ct.stubs],
                "positions": [[float(x) for x in row] for row in tree.positions],
                "offset": [float(x) for x in tree.offset],
            }
        )
    doc["glue_pairs"] = [
        {"tree_a": p.tree_a, "stub_a": p.stub_a, "tree_b": p.tree_b, "stub_b": p.stub_b}
        for p in forest.glue_pairs
    ]
    artifacts = {}
    if args.out_json:
        Path(args.out_json).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        artifacts["decomposition"] = args.out_json
    return _emit(report, args, "cut", artifacts)


def _cmd_thicken(args) -> int:
    g, lam = _read_graph(args.input)
    if rank(g) != 2:
        print("thicken requires a rank-2 graph for contour extraction", file=sys.stderr)
        return 2
    _, _, _, forest, trees, lattice = _build_thickening(g, lam)
    fields = [ThickeningField(tr) for tr in trees]
    result = sublevel_region(fields, lattice, GridConfig(h=args.grid_h), level=0.25)
    report = result.report
    artifacts = {}
    if args.out_svg:
        Path(args.out_svg).write_text(render.region_svg(result))
        artifacts["svg"] = args.out_svg
    if args.out_csv:
        Path(args.out_csv).write_text(render.boundary_csv(result))
        artifacts["boundary_csv"] = args.out_csv
    if args.out_grid:
        Path(args.out_grid).write_text(render.field_grid_csv(result))
        artifacts["grid_csv"] = args.out_grid
    return _emit(report, args, "thicken", artifacts)


def _cmd_verify(args) -> int:
    g, lam = _read_graph(args.input)
    report = Report()
    report.extend(validate_shape(g, require_gr=False))
    report.extend(validate_length_function(g, lam))

    t = spanning_tree(g, lam, 0)
    omega = canonical_cocycle(g, lam, t)
    report.extend(balance_report(omega, tol=args.tol_structural))
    report.extend(lambda_star_identity_report(g, lam, t, omega, tol=args.tol_structural))
    report.extend(check_nonsingular(omega, zero_tol=args.tol_geometric))
    report.extend(coefficient_structure_report(g, t, omega, tol=args.tol_geometric))
    metric = good_metric(g, t, omega, lam)
    report.extend(sign_condition_report(g, omega, metric.u_matrix))
    report.extend(verify_psi())

    im = torus_immersion(g, lam, tree=t)
    report.extend(check_local_embedding(im))

    forest = cut_long_edges(g, lam)
    trees = embed_trees(forest, omega, metric.u_matrix, tree=t)
    fields = [ThickeningField(tr) for tr in trees]
    for tree, field in zip(trees, fields):
        report.extend(check_tautness(tree))
        report.extend(formula_agreement_report(field, n_points=max(1000, args.samples // 10), seed=args.seed))
        report.extend(subdivision_report(tree, seed=args.seed))
        report.extend(gradient_fd_report(field, n_points=min(2000, args.samples), seed=args.seed))
        report.extend(
            verify_key_lemma_cli(field, n_samples=args.samples, seed=args.seed)
        )
        report.extend(leaf_standardness_report(field, seed=args.seed))
    report.extend(pasting_report(trees, forest.glue_pairs, lattice=4.0 * metric.u_matrix, seed=args.seed))
    return _emit(report, args, "verify")


def verify_key_lemma_cli(field: ThickeningField, n_samples: int, seed: int) -> Report:
    from .thickening import verify_key_lemma

    return verify_key_lemma(field, KeyLemmaConfig(n_samples=n_samples, seed=seed))


def _cmd_family(args) -> int:
    fam = family_mod.parse_family(Path(args.input).read_text())
    report = Report()
    bary = fam.barycenter()
    for stage in range(fam.n_stages):
        vertex = np.zeros(fam.n_stages)
        vertex[stage] = 1.0
        for endpoint in (vertex, bary):
            lam = family_mod.interpolate_length(fam, endpoint)
            check = validate_length_function(fam.graph, lam)
            if not check.ok:
                report.add("interpolated_length_valid", False, location=f"stage {stage}")
    report.add("interpolated_lengths_valid", True)
    e0 = np.zeros(fam.n_stages)
    e0[0] = 1.0
    report.extend(family_mod.family_cocycle_path(fam, 0.9 * e0 + 0.1 * bary, 0.1 * e0 + 0.9 * bary))
    for stage in range(1, fam.n_stages):
        report.extend(family_mod.face_compatibility_check(fam, stage))
    return _emit(report, args, "family")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphjac", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--input", required=True, help="graph (or family) JSON document")
        p.add_argument("--out", default=None, help="write the JSON report here")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--samples", type=int, default=100_000)
        p.add_argument("--grid-h", dest="grid_h", type=float, default=0.05)
        p.add_argument("--tol-structural", dest="tol_structural", type=float, default=1e-12)
        p.add_argument("--tol-geometric", dest="tol_geometric", type=float, default=1e-9)

    p = sub.add_parser("validate", help="graph shape and length-function reports")
    common(p)
    p.add_argument("--require-gr0", action="store_true", help="fail on valence<3, disconnection, or bridges")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("cocycle", help="canonical cocycle CSV + nonsingularity report")
    common(p)
    p.add_argument("--out-csv", default=None)
    p.set_defaults(func=_cmd_cocycle)

    p = sub.add_parser("embed", help="torus immersion exports")
    common(p)
    p.add_argument("--out-csv", default=None)
    p.add_argument("--out-svg", default=None)
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("cut", help="tree decomposition JSON")
    common(p)
    p.add_argument("--out-json", default=None)
    p.set_defaults(func=_cmd_cut)

    p = sub.add_parser("thicken", help="quarter sublevel region on the torus (rank 2)")
    common(p)
    p.add_argument("--out-svg", default=None)
    p.add_argument("--out-csv", default=None)
    p.add_argument("--out-grid", default=None)
    p.set_defaults(func=_cmd_thicken)

    p = sub.add_parser("verify", help="full lemma suite on one graph")
    common(p)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("family", help="simplex sweep: smoothness and face compatibility")
    common(p)
    p.set_defaults(func=_cmd_family)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
