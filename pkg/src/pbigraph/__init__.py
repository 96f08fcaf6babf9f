"""Graph p-biharmonic equations on point clouds: operators, solvers, diagnostics."""

from .geometry import (
    BoxDomain,
    Density,
    InvalidDensityError,
    NeighborIndex,
    PointCloud,
    build_neighbor_index,
    sample_point_cloud,
)
from .kernels import Kernel, SigmaEta, eval_rescaled, sigma_eta
from .graph_ops import (
    WeightedGraph,
    assemble_graph,
    graph_laplacian,
    laplacian_at_points,
    p_biharmonic_energy,
    p_biharmonic_residual,
    p_dirichlet_energy,
)
from .hypergraph import (
    OrientedHypergraph,
    build_hypergraph,
    from_arcs,
    hyper_adjoint,
    hyper_divergence,
    hyper_gradient,
    hyper_p_laplacian,
)
from .presets import AnalyticPreset, cosine_product
from .nonlocal_ops import (
    DegenerateInputError,
    GridFunction,
    NonlocalConfig,
    ResolutionError,
    consistency_error,
    graph_consistency_error,
    nonlocal_laplacian,
    nonlocal_poincare_ratio,
    nonlocal_poisson_residual,
)
from .continuum import (
    ManufacturedProblem,
    WeightedFDOperator,
    build_fd_operator,
    continuum_p_biharmonic_solve,
    lp_norm,
    manufactured_forcing,
    weighted_laplacian_fd,
)
from .solver import (
    SelfAdjointnessError,
    SolveConfig,
    SolveReport,
    cg_solve_p2,
    minimize,
    probe_self_adjoint,
    solve_graph_p_biharmonic,
    solve_hypergraph_p_laplacian,
)
from .transport import VoronoiMap, delta_n, lp_error, tlp_distance, voronoi_map

__version__ = "0.1.0"

__all__ = [
    "BoxDomain", "Density", "InvalidDensityError", "NeighborIndex", "PointCloud",
    "build_neighbor_index", "sample_point_cloud",
    "Kernel", "SigmaEta", "eval_rescaled", "sigma_eta",
    "WeightedGraph", "assemble_graph", "graph_laplacian", "laplacian_at_points",
    "p_biharmonic_energy", "p_biharmonic_residual", "p_dirichlet_energy",
    "OrientedHypergraph", "build_hypergraph", "from_arcs", "hyper_adjoint",
    "hyper_divergence", "hyper_gradient", "hyper_p_laplacian",
    "AnalyticPreset", "cosine_product",
    "DegenerateInputError", "GridFunction", "NonlocalConfig", "ResolutionError",
    "consistency_error", "graph_consistency_error", "nonlocal_laplacian",
    "nonlocal_poincare_ratio", "nonlocal_poisson_residual",
    "ManufacturedProblem", "WeightedFDOperator", "build_fd_operator",
    "continuum_p_biharmonic_solve", "lp_norm", "manufactured_forcing",
    "weighted_laplacian_fd",
    "SelfAdjointnessError", "SolveConfig", "SolveReport", "cg_solve_p2", "minimize",
    "probe_self_adjoint", "solve_graph_p_biharmonic", "solve_hypergraph_p_laplacian",
    "VoronoiMap", "delta_n", "lp_error", "tlp_distance", "voronoi_map",
]
