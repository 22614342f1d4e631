"""Jacobian tori of metric graphs.

Canonical balanced cocycles, the Abel-Jacobi immersion into the torus
H_1(R)/H_1(Z), the decomposition into taut embedded trees, and the tubular
thickening field whose quarter sublevel set is a compact C1 manifold
retracting onto the graph.
"""

from .graphs import (
    Graph,
    LengthFunction,
    Morphism,
    OrientedCycle,
    SpanningTreeData,
    collapse,
    cycle_basis,
    graph_from_dict,
    parse_document,
    parse_graph,
    rank,
    separating_edges,
    spanning_tree,
    validate_length_function,
    validate_shape,
)
from .period import (
    BalancedCocycle,
    GoodMetric,
    PeriodMatrix,
    canonical_cocycle,
    check_nonsingular,
    extend_cocycle,
    good_metric,
    lambda_star,
    period_matrix,
)
from .immersion import (
    CutForest,
    EmbeddedTree,
    ImmersedGraph,
    check_local_embedding,
    check_tautness,
    cut_long_edges,
    embed_trees,
    torus_immersion,
    vertex_potentials,
)
from .thickening import (
    GridConfig,
    KeyLemmaConfig,
    RegionResult,
    ThickeningField,
    leaf_standardness_report,
    pasting_report,
    phi_eval,
    phi_grad,
    psi,
    psi_prime,
    subdivide_tree,
    sublevel_region,
    verify_key_lemma,
    verify_psi,
)
from .family import (
    SimplexFamily,
    face_compatibility_check,
    family_cocycle_path,
    family_embedded_trees,
    interpolate_length,
    parse_family,
)

__version__ = "0.1.0"
