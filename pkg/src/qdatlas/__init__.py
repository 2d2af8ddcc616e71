"""Trees and ideal polygons of planar polynomial quadratic differentials.

The family [z^(2m) - (a + ib) z^(m-1)] dz^2 drives everything: its vertical
foliation collapses to a metric star tree with edge length
nu = pi |b| / (2 (m + 1)), and the associated complete harmonic embedding
sends the plane onto an ideal polygon whose angle parameter alpha follows
tan(alpha/2) = sin(pi/(m+1)) / (cos(pi/(m+1)) + e^(2 nu)). The closed forms
are cross-checked numerically: adaptive quadrature and branch-continuous
path integrals for the tree, and an elliptic solve for the energy density
with trajectory tracing, image-length functionals and hyperbolic
development for the polygon.
"""

__version__ = "0.1.0"

from .errors import AtlasError
from .hypdisc import (
    FermiCurve,
    IdealPolygon,
    Mobius,
    cosine_rule,
    cross_ratio,
    dist,
    endpoint_gap_check,
    equivalent,
    fermi_curvature,
    fermi_dist,
    fermi_to_disc,
    geodesic_ideal_endpoints,
    normalize,
)
from .imagelaw import (
    AngleFunction,
    PolygonPrediction,
    classify_shi_tam,
    closed_form_alpha,
    other_branch,
    predict,
    solve_asymptotic_system,
)
from .polyfield import ComplexPoly, SymmetricFamily, all_zeros, family_roots, roots
from .quaddiff import (
    NaturalPath,
    TracedTrajectory,
    critical_directions,
    family_edge_integral,
    integrate_zeta,
    trace,
)
from .realtree import (
    MetricTree,
    build_family_tree,
    family_zero_list,
    measure_edge_numeric,
    tree_distance,
)
from .vortex import (
    DecayFit,
    Grid,
    PullbackMetric,
    SolverConfig,
    VortexSolution,
    decay_fit,
    develop_curve,
    extract_nu,
    gaussian_curvature,
    horizontal_image_length,
    load_field,
    measure_alpha,
    parse_solver_config,
    phi_distance,
    phi_distance_field,
    pullback_metric,
    save_field,
    solve_vortex,
    vertical_image_length,
)

__all__ = [
    "AngleFunction",
    "AtlasError",
    "ComplexPoly",
    "DecayFit",
    "FermiCurve",
    "Grid",
    "IdealPolygon",
    "MetricTree",
    "Mobius",
    "NaturalPath",
    "PolygonPrediction",
    "PullbackMetric",
    "SolverConfig",
    "SymmetricFamily",
    "TracedTrajectory",
    "VortexSolution",
    "all_zeros",
    "build_family_tree",
    "classify_shi_tam",
    "closed_form_alpha",
    "cosine_rule",
    "critical_directions",
    "cross_ratio",
    "decay_fit",
    "develop_curve",
    "dist",
    "endpoint_gap_check",
    "equivalent",
    "extract_nu",
    "family_edge_integral",
    "family_roots",
    "family_zero_list",
    "fermi_curvature",
    "fermi_dist",
    "fermi_to_disc",
    "gaussian_curvature",
    "geodesic_ideal_endpoints",
    "horizontal_image_length",
    "integrate_zeta",
    "load_field",
    "measure_alpha",
    "measure_edge_numeric",
    "normalize",
    "other_branch",
    "parse_solver_config",
    "phi_distance",
    "phi_distance_field",
    "predict",
    "pullback_metric",
    "roots",
    "save_field",
    "solve_asymptotic_system",
    "solve_vortex",
    "trace",
    "tree_distance",
    "vertical_image_length",
]
