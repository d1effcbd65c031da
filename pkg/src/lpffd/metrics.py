"""Angular and area distortion measures over deformed triangle meshes.

Per triangle, the affine map from the rest shape to the deformed shape has a
2x2 Jacobian (surface triangles in 3D are flattened isometrically to their
own planes first). Its singular values feed two symmetric measures that are
zero exactly for conformal (angular) and area-preserving (area) maps, and
both are invariant to rigid motions. Aggregates are rest-area weighted means.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import TriMesh

# Rest triangles below this relative area cannot be flattened reliably.
_DEGENERATE_REL = 1e-12


def _flatten_triangles(verts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    """Edge matrices of each triangle in its own isometric 2D frame.

    Returns (m, 2, 2) arrays with columns = the two edge vectors from the
    first corner. 2D input is used as-is; 3D triangles use an orthonormal
    in-plane frame, so rigid motions leave the result unchanged.
    """
    e1 = verts[tris[:, 1]] - verts[tris[:, 0]]
    e2 = verts[tris[:, 2]] - verts[tris[:, 0]]
    if verts.shape[1] == 2:
        E = np.empty((len(tris), 2, 2))
        E[:, :, 0] = e1
        E[:, :, 1] = e2
        return E
    n1 = np.linalg.norm(e1, axis=1)
    u = np.zeros_like(e1)
    good = n1 > 0
    u[good] = e1[good] / n1[good, None]
    normal = np.cross(e1, e2)
    nn = np.linalg.norm(normal, axis=1)
    w = np.zeros_like(normal)
    ok = nn > 0
    w[ok] = normal[ok] / nn[ok, None]
    v = np.cross(w, u)
    E = np.zeros((len(tris), 2, 2))
    E[:, 0, 0] = n1
    E[:, 0, 1] = np.einsum("ij,ij->i", e2, u)
    E[:, 1, 1] = np.einsum("ij,ij->i", e2, v)
    return E


def triangle_singular_values(rest_tri: np.ndarray, deformed_tri: np.ndarray):
    """Singular values (s1 >= s2) of the rest-to-deformed affine map of a
    single triangle. Raises on degenerate input triangles."""
    rest_tri = np.asarray(rest_tri, dtype=float)
    deformed_tri = np.asarray(deformed_tri, dtype=float)
    tri = np.array([[0, 1, 2]])
    E = _flatten_triangles(rest_tri, tri)[0]
    F = _flatten_triangles(deformed_tri, tri)[0]
    scale = max(np.abs(E).max(), 1e-300)
    if abs(np.linalg.det(E)) <= _DEGENERATE_REL * scale**2:
        raise ValueError("rest triangle is degenerate")
    if abs(np.linalg.det(F)) <= _DEGENERATE_REL * max(np.abs(F).max(), 1e-300) ** 2:
        raise ValueError("deformed triangle is degenerate")
    J = F @ np.linalg.inv(E)
    s = np.linalg.svd(J, compute_uv=False)
    return float(s[0]), float(s[1])


@dataclass
class DistortionReport:
    """Area-weighted distortion aggregates plus the per-triangle table.

    ``per_triangle`` rows are ``(s1, s2, angular_term, area_term)``;
    degenerate deformed triangles carry ``inf`` terms and their ids are
    listed in ``degenerate``.
    """

    angular: float
    area: float
    per_triangle: np.ndarray
    rest_areas: np.ndarray
    degenerate: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "angular": self.angular,
            "area": self.area,
            "degenerate": list(self.degenerate),
            "perTriangle": [
                {
                    "s1": float(r[0]),
                    "s2": float(r[1]),
                    "angular": float(r[2]),
                    "area": float(r[3]),
                    "restArea": float(a),
                }
                for r, a in zip(self.per_triangle, self.rest_areas)
            ],
        }


def distortion_report(mesh: TriMesh, deformed_vertices: np.ndarray) -> DistortionReport:
    """Distortion of the map from the rest mesh to ``deformed_vertices``.

    angular term: (s1/s2 + s2/s1)/2 - 1 (zero iff conformal);
    area term: (s1*s2 + 1/(s1*s2))/2 - 1 (zero iff area preserving);
    both aggregated as rest-area-weighted means.
    """
    Vc = np.asarray(deformed_vertices, dtype=float)
    if Vc.shape != mesh.vertices.shape:
        raise ValueError("deformed vertices must match the mesh vertex array")
    tris = mesh.triangles
    E = _flatten_triangles(mesh.vertices, tris)
    F = _flatten_triangles(Vc, tris)
    rest_areas = mesh.triangle_areas()
    floor = _DEGENERATE_REL * mesh.area_scale
    if (rest_areas < floor).any():
        bad = int(np.argmax(rest_areas < floor))
        raise ValueError(f"rest triangle {bad} is degenerate")
    def_areas = 0.5 * np.abs(np.linalg.det(F))
    degenerate = def_areas < floor
    J = np.matmul(F, np.linalg.inv(E))
    s = np.linalg.svd(J, compute_uv=False)
    s1 = s[:, 0]
    s2 = np.maximum(s[:, 1], 1e-300)
    angular_t = 0.5 * (s1 / s2 + s2 / s1) - 1.0
    prod = s1 * s2
    area_t = 0.5 * (prod + 1.0 / np.maximum(prod, 1e-300)) - 1.0
    angular_t[degenerate] = np.inf
    area_t[degenerate] = np.inf
    per = np.stack([s1, s2, angular_t, area_t], axis=1)
    total = rest_areas.sum()
    angular = float(np.sum(rest_areas * angular_t) / total) if total > 0 else 0.0
    area = float(np.sum(rest_areas * area_t) / total) if total > 0 else 0.0
    return DistortionReport(angular, area, per, rest_areas, np.flatnonzero(degenerate).tolist())
