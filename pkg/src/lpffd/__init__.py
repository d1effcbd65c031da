"""Locality-preserving free-form deformation.

Estimates control-lattice handle positions from sparse vertex and grid
constraints while minimizing distortion of the embedded mesh, with baseline
solvers, distortion metrics, image warping, a benchmark harness, and a live
editor session service.
"""
from .arap import build_laplacian, differential_coords, dgp_solve, fit_rotations
from .baselines import Regularizer, dgp_inverse_pipeline, hsu_solve, inverse_ffd_fit
from .errors import LpffdError, NonPositiveDefiniteError, VertexOutsideGrid
from .ffd import EmbeddingWeights, apply_grid, bernstein_basis, build_weights, forward_ffd
from .geometry import (
    HandleSet,
    LatticeGrid,
    OutsidePolicy,
    TriMesh,
    embed,
    split_components,
    validate_mesh,
)
from .metrics import DistortionReport, distortion_report, triangle_singular_values
from .raster import warp_image
from .solver import (
    EnergyBreakdown,
    FactoredSystem,
    SolveResult,
    SolveSession,
    SolverConfig,
    assemble_system,
    energy_eval,
    lp_ffd_solve,
)

__version__ = "0.1.0"

__all__ = [
    "EmbeddingWeights",
    "DistortionReport",
    "EnergyBreakdown",
    "FactoredSystem",
    "HandleSet",
    "LatticeGrid",
    "LpffdError",
    "NonPositiveDefiniteError",
    "OutsidePolicy",
    "Regularizer",
    "SolveResult",
    "SolveSession",
    "SolverConfig",
    "TriMesh",
    "VertexOutsideGrid",
    "apply_grid",
    "assemble_system",
    "bernstein_basis",
    "build_laplacian",
    "build_weights",
    "dgp_inverse_pipeline",
    "dgp_solve",
    "differential_coords",
    "distortion_report",
    "embed",
    "energy_eval",
    "fit_rotations",
    "forward_ffd",
    "hsu_solve",
    "inverse_ffd_fit",
    "lp_ffd_solve",
    "split_components",
    "triangle_singular_values",
    "validate_mesh",
    "warp_image",
]
