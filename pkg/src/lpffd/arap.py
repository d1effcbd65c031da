"""Differential-geometry machinery: graph Laplacians, differential
coordinates, per-vertex rotation fitting, and a local-global deformation
solver over mesh vertices (used as the pipeline baseline).
"""
from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .geometry import DEGENERATE_AREA_REL, TriMesh

logger = logging.getLogger(__name__)

DEFAULT_ITERATIONS = 5
DEFAULT_REL_TOL = 1e-6


@dataclass
class LaplacianMatrix:
    """Sparse symmetric graph Laplacian with its per-edge weights.

    ``matrix`` has zero row sums, nonpositive off-diagonals, and block
    structure matching the mesh components. ``edges`` lists undirected edges
    (i < j) aligned with ``edge_weights``.
    """

    matrix: sparse.csr_matrix
    mode: str
    edges: np.ndarray
    edge_weights: np.ndarray
    _fingerprint: Optional[str] = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def fingerprint(self) -> str:
        """Content hash used in factorization cache keys."""
        if self._fingerprint is None:
            h = hashlib.sha1()
            h.update(self.mode.encode())
            h.update(np.ascontiguousarray(self.edges).tobytes())
            h.update(np.ascontiguousarray(self.edge_weights).tobytes())
            self._fingerprint = h.hexdigest()
        return self._fingerprint


def build_laplacian(mesh: TriMesh, mode: str = "uniform") -> LaplacianMatrix:
    """Graph Laplacian with uniform or cotangent edge weights.

    Cotangent weights are half the sum of the cotangents of the angles
    opposite each edge (a single term on boundary edges) and are clamped to
    be nonnegative. Degenerate triangles make cotangents meaningless, so they
    raise in cotangent mode.
    """
    if mode not in ("uniform", "cotangent"):
        raise ValueError(f"unknown Laplacian mode {mode!r}")
    edges = mesh.edges
    n = mesh.n_vertices
    if mode == "uniform":
        w = np.ones(len(edges))
    else:
        areas = mesh.triangle_areas()
        floor = DEGENERATE_AREA_REL * mesh.area_scale
        bad = np.flatnonzero(areas < floor)
        if len(bad):
            raise ValueError(
                f"triangle {int(bad[0])} is degenerate; cotangent weights are undefined"
            )
        acc: dict = {}
        v = mesh.vertices
        t = mesh.triangles
        for corner in range(3):
            i = t[:, corner]
            j = t[:, (corner + 1) % 3]
            k = t[:, (corner + 2) % 3]
            # cot of the angle at i, opposite edge (j, k)
            e1 = v[j] - v[i]
            e2 = v[k] - v[i]
            dot = np.einsum("ij,ij->i", e1, e2)
            cot = dot / (2.0 * areas)
            a = np.minimum(j, k)
            b = np.maximum(j, k)
            for aa, bb, cc in zip(a, b, cot):
                acc[(int(aa), int(bb))] = acc.get((int(aa), int(bb)), 0.0) + 0.5 * float(cc)
        w = np.array([max(acc.get((int(i), int(j)), 0.0), 0.0) for i, j in edges])
    i, j = edges[:, 0], edges[:, 1]
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([j, i, i, j])
    vals = np.concatenate([-w, -w, w, w])
    L = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    return LaplacianMatrix(L, mode, edges, w)


def differential_coords(laplacian: LaplacianMatrix, positions: np.ndarray) -> np.ndarray:
    """Differential representation of the shape: ``L @ V`` per coordinate."""
    V = np.asarray(positions, dtype=float)
    if V.shape[0] != laplacian.n:
        raise ValueError("positions do not match the Laplacian size")
    return laplacian.matrix @ V


def _directed_edges(laplacian: LaplacianMatrix):
    e = laplacian.edges
    w = laplacian.edge_weights
    src = np.concatenate([e[:, 0], e[:, 1]])
    dst = np.concatenate([e[:, 1], e[:, 0]])
    return src, dst, np.concatenate([w, w])


def fit_rotations(
    mesh: TriMesh,
    laplacian: LaplacianMatrix,
    rest: np.ndarray,
    current: np.ndarray,
) -> np.ndarray:
    """Best proper rotation per vertex fitting its one-ring edges.

    Minimizes the weighted squared residual between deformed edges and
    rotated rest edges. 2D uses the closed form from the aggregated
    dot/cross sums; 3D uses an SVD of the weighted edge covariance with a
    determinant sign correction. Vertices whose edges all vanish get the
    identity.
    """
    rest = np.asarray(rest, dtype=float)
    current = np.asarray(current, dtype=float)
    n, d = rest.shape
    src, dst, w = _directed_edges(laplacian)
    e = rest[src] - rest[dst]
    ec = current[src] - current[dst]
    R = np.tile(np.eye(d), (n, 1, 1))
    if d == 2:
        dots = w * np.einsum("ij,ij->i", e, ec)
        crosses = w * (e[:, 0] * ec[:, 1] - e[:, 1] * ec[:, 0])
        A = np.bincount(src, weights=dots, minlength=n)
        B = np.bincount(src, weights=crosses, minlength=n)
        norm = np.hypot(A, B)
        ok = norm > 0
        if not ok.all():
            logger.debug("fit_rotations: %d vertices with degenerate one-rings", int((~ok).sum()))
        theta = np.where(ok, np.arctan2(B, A), 0.0)
        c, s = np.cos(theta), np.sin(theta)
        R[:, 0, 0] = c
        R[:, 0, 1] = -s
        R[:, 1, 0] = s
        R[:, 1, 1] = c
        return R
    S = np.zeros((n, d, d))
    np.add.at(S, src, w[:, None, None] * (e[:, :, None] * ec[:, None, :]))
    norms = np.linalg.norm(S.reshape(n, -1), axis=1)
    ok = norms > 0
    if not ok.all():
        logger.debug("fit_rotations: %d vertices with degenerate one-rings", int((~ok).sum()))
    U, _, Vt = np.linalg.svd(S[ok])
    Rok = np.matmul(Vt.transpose(0, 2, 1), U.transpose(0, 2, 1))
    flip = np.linalg.det(Rok) < 0
    if flip.any():
        Vt_f = Vt[flip].copy()
        Vt_f[:, -1, :] *= -1.0
        Rok[flip] = np.matmul(Vt_f.transpose(0, 2, 1), U[flip].transpose(0, 2, 1))
    R[ok] = Rok
    return R


def align_rotations(rest_vec: np.ndarray, cur_vec: np.ndarray) -> np.ndarray:
    """Proper rotation per row taking ``rest_vec`` onto the direction of
    ``cur_vec`` (the exact minimizer of ``|cur - R @ rest|`` over rotations).

    Rows where either vector vanishes get the identity; 3D anti-parallel
    pairs rotate by pi about a perpendicular axis.
    """
    rest_vec = np.asarray(rest_vec, dtype=float)
    cur_vec = np.asarray(cur_vec, dtype=float)
    n, d = rest_vec.shape
    R = np.tile(np.eye(d), (n, 1, 1))
    nr = np.linalg.norm(rest_vec, axis=1)
    nc = np.linalg.norm(cur_vec, axis=1)
    ok = (nr > 0) & (nc > 0)
    if d == 2:
        dots = np.einsum("ij,ij->i", rest_vec, cur_vec)
        crosses = rest_vec[:, 0] * cur_vec[:, 1] - rest_vec[:, 1] * cur_vec[:, 0]
        theta = np.where(ok, np.arctan2(crosses, dots), 0.0)
        c, s = np.cos(theta), np.sin(theta)
        R[:, 0, 0] = c
        R[:, 0, 1] = -s
        R[:, 1, 0] = s
        R[:, 1, 1] = c
        return R
    a = np.zeros_like(rest_vec)
    b = np.zeros_like(cur_vec)
    a[ok] = rest_vec[ok] / nr[ok, None]
    b[ok] = cur_vec[ok] / nc[ok, None]
    axis = np.cross(a, b)
    s = np.linalg.norm(axis, axis=1)
    c = np.einsum("ij,ij->i", a, b)
    regular = ok & (s > 1e-12)
    if regular.any():
        k = axis[regular] / s[regular, None]
        K = np.zeros((regular.sum(), 3, 3))
        K[:, 0, 1], K[:, 0, 2] = -k[:, 2], k[:, 1]
        K[:, 1, 0], K[:, 1, 2] = k[:, 2], -k[:, 0]
        K[:, 2, 0], K[:, 2, 1] = -k[:, 1], k[:, 0]
        sr = s[regular][:, None, None]
        cr = c[regular][:, None, None]
        R[regular] = np.eye(3) + sr * K + (1.0 - cr) * np.matmul(K, K)
    anti = ok & (s <= 1e-12) & (c < 0)
    for idx in np.flatnonzero(anti):
        # Rotate by pi about any axis perpendicular to the vector.
        u = a[idx]
        p = np.zeros(3)
        p[np.argmin(np.abs(u))] = 1.0
        p -= u * (u @ p)
        p /= np.linalg.norm(p)
        R[idx] = 2.0 * np.outer(p, p) - np.eye(3)
    return R


def rotate_rows(R: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Apply one rotation per row: ``out[i] = R[i] @ vecs[i]``."""
    return np.einsum("nij,nj->ni", R, vecs)


def dgp_energy(
    laplacian: LaplacianMatrix,
    rest: np.ndarray,
    current: np.ndarray,
    rotations: np.ndarray,
) -> float:
    """One-ring rigidity energy: weighted squared deviation of deformed edges
    from rotated rest edges, summed over ordered neighbor pairs."""
    src, dst, w = _directed_edges(laplacian)
    e = rest[src] - rest[dst]
    ec = current[src] - current[dst]
    res = ec - rotate_rows(rotations[src], e)
    return float(np.sum(w * np.einsum("ij,ij->i", res, res)))


@dataclass
class DgpResult:
    vertices: np.ndarray
    energies: list
    anchored_components: list


def dgp_solve(
    mesh: TriMesh,
    laplacian: LaplacianMatrix,
    handles: Mapping[int, np.ndarray],
    iterations: int = DEFAULT_ITERATIONS,
    rel_tolerance: float = DEFAULT_REL_TOL,
) -> DgpResult:
    """Local-global solve over vertex positions with hard handle constraints.

    Alternates one-ring rotation fitting with an exact solve of the reduced
    Laplacian system (constrained rows eliminated). Components without any
    handle are anchored at their rest pose, which keeps the system regular
    and mirrors how vertex-only deformers behave on layered scenes.
    """
    V = mesh.vertices
    n, d = V.shape
    comp = mesh.component_ids
    handled = np.zeros(n, dtype=bool)
    targets = V.copy()
    for i, c in handles.items():
        handled[int(i)] = True
        targets[int(i)] = np.asarray(c, dtype=float)
    with_handles = np.unique(comp[handled]) if handled.any() else np.array([], dtype=int)
    anchored = sorted(set(range(mesh.n_components)) - set(with_handles.tolist()))
    if anchored:
        logger.info("dgp_solve: anchoring %d handle-free component(s) at rest", len(anchored))
        handled |= np.isin(comp, anchored)
    free = np.flatnonzero(~handled)
    fixed = np.flatnonzero(handled)
    L = laplacian.matrix.tocsc()
    factor = None
    if len(free):
        factor = splu(L[free][:, free].tocsc())
    Vc = targets.copy()
    energies = []
    prev = None
    for _ in range(max(1, iterations)):
        R = fit_rotations(mesh, laplacian, V, Vc)
        if len(free):
            src, dst, w = _directed_edges(laplacian)
            e = V[src] - V[dst]
            halves = 0.5 * w[:, None] * (rotate_rows(R[src], e) + rotate_rows(R[dst], e))
            b = np.zeros((n, d))
            np.add.at(b, src, halves)
            rhs = b[free] - L[free][:, fixed] @ Vc[fixed]
            Vc[free] = factor.solve(rhs)
        energy = dgp_energy(laplacian, V, Vc, R)
        energies.append(energy)
        if prev is not None and abs(prev - energy) <= rel_tolerance * max(prev, 1e-30):
            break
        prev = energy
    return DgpResult(Vc, energies, anchored)
