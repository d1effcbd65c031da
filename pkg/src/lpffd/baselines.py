"""Comparison methods: direct handle estimation from vertex constraints
(no locality term) and the two-step pipeline that first deforms vertices
with the one-ring rigidity solver and then fits grid handles to the result.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from time import perf_counter
import numpy as np
from scipy import linalg as dense_linalg
from scipy import sparse

from .arap import DgpResult, LaplacianMatrix, dgp_solve
from .errors import NonPositiveDefiniteError
from .ffd import EmbeddingWeights, forward_ffd
from .geometry import HandleSet, LatticeGrid, TriMesh
from .solver import SolverConfig, assemble_system, _iteration_rhs

logger = logging.getLogger(__name__)


class Regularizer(Enum):
    """Regularizers for the inverse handle fit."""

    REST_ANCHOR = "rest_anchor"          # pull every handle toward its rest position
    NOH_SMOOTHING = "noh_smoothing"      # preserve rest differences along lattice edges


def hsu_solve(
    weights: EmbeddingWeights,
    grid: LatticeGrid,
    handles: HandleSet,
    config: SolverConfig = SolverConfig(),
) -> np.ndarray:
    """Direct-manipulation baseline: one linear solve for the handle
    positions from vertex/grid targets plus the rest anchor, with no
    locality term (the combined objective with a zero locality weight)."""
    cfg = config.replace(lam_ml=0.0)
    system = assemble_system(weights, None, handles, cfg, grid)
    rhs = _iteration_rhs(system, weights, handles, cfg, grid, None)
    return system.solve(rhs)


def grid_edges(dims) -> np.ndarray:
    """Axis-aligned lattice edges as (e, 2) flat handle index pairs."""
    dims = tuple(int(d) for d in dims)
    idx = np.arange(int(np.prod(dims))).reshape(dims)
    pairs = []
    for axis in range(len(dims)):
        a = np.moveaxis(idx, axis, 0)
        pairs.append(np.stack([a[:-1].reshape(-1), a[1:].reshape(-1)], axis=1))
    return np.concatenate(pairs, axis=0)


def _grid_graph_laplacian(dims) -> sparse.csr_matrix:
    e = grid_edges(dims)
    n = int(np.prod(dims))
    i, j = e[:, 0], e[:, 1]
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([j, i, i, j])
    vals = np.concatenate([-np.ones(len(e)), -np.ones(len(e)), np.ones(len(e)), np.ones(len(e))])
    return sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def inverse_ffd_fit(
    weights: EmbeddingWeights,
    grid: LatticeGrid,
    target_vertices: np.ndarray,
    regularizer: Regularizer = Regularizer.REST_ANCHOR,
    lam: float = 1e-2,
) -> np.ndarray:
    """Fit handle positions so the blended vertices match ``target_vertices``.

    Solves ``argmin |W P - V_target|^2 + lam * Reg(P)`` where the rest-anchor
    regularizer penalizes handle displacement and the smoothing regularizer
    penalizes changes of the rest differences along lattice edges (and is
    therefore translation-invariant).
    """
    V = np.asarray(target_vertices, dtype=float)
    if V.shape != (weights.n_vertices, grid.dimension):
        raise ValueError("target vertices must be (n_vertices, dim)")
    Wm = weights.matrix
    A = (Wm.T @ Wm).toarray()
    b = Wm.T @ V
    if lam != 0.0:
        if regularizer is Regularizer.REST_ANCHOR:
            A[np.diag_indices_from(A)] += lam
            b += lam * grid.rest
        else:
            Lg = _grid_graph_laplacian(grid.dims)
            A += lam * Lg.toarray()
            b += lam * (Lg @ grid.rest)
    try:
        factor = dense_linalg.cho_factor(0.5 * (A + A.T))
    except dense_linalg.LinAlgError:
        raise NonPositiveDefiniteError(
            "inverse fit system is singular; the weight matrix is rank deficient "
            "and the regularizer does not cover the null space"
        ) from None
    return dense_linalg.cho_solve(factor, b)


@dataclass
class PipelineResult:
    """Both stages of the two-step pipeline, kept so the gap between the
    vertex-space deformation and its lattice reprojection is measurable."""

    dgp: DgpResult
    handle_positions: np.ndarray
    vertices: np.ndarray
    stage1_time: float
    stage2_time: float

    @property
    def stage_gap(self) -> float:
        """Max vertex distance between the two stages' outputs."""
        return float(np.linalg.norm(self.vertices - self.dgp.vertices, axis=1).max())


def dgp_inverse_pipeline(
    mesh: TriMesh,
    grid: LatticeGrid,
    weights: EmbeddingWeights,
    laplacian: LaplacianMatrix,
    handles: HandleSet,
    config: SolverConfig = SolverConfig(),
    regularizer: Regularizer = Regularizer.NOH_SMOOTHING,
    lam: float = 1e-2,
) -> PipelineResult:
    """Two-step baseline: deform vertices with hard constraints, then fit
    grid handles to the deformed vertices and re-blend through the lattice.

    Only vertex handles are supported; the vertex-space stage has no notion
    of grid-handle targets.
    """
    if handles.grid:
        raise ValueError("the two-step pipeline supports vertex handles only")
    t0 = perf_counter()
    stage1 = dgp_solve(
        mesh, laplacian, handles.vertex, config.max_iterations, config.rel_tolerance
    )
    t1 = perf_counter()
    P = inverse_ffd_fit(weights, grid, stage1.vertices, regularizer, lam)
    V = forward_ffd(weights, P)
    t2 = perf_counter()
    return PipelineResult(stage1, P, V, t1 - t0, t2 - t1)
