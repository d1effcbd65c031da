"""Mesh and lattice domain types, validation, and lattice-space embedding.

A :class:`TriMesh` may contain several isolated layers (e.g. a figure whose
eyes and mouth are separate meshes); connectivity-derived data (one-ring
neighborhoods, component labels) is computed lazily and cached. A
:class:`LatticeGrid` is a tensor-product control lattice over an axis-aligned
box with rest handle positions on a regular grid. Both types are immutable
after construction and safe to share between sessions.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import VertexOutsideGrid

logger = logging.getLogger(__name__)

# Triangle area floor, relative to the squared bounding-box diagonal.
DEGENERATE_AREA_REL = 1e-12
# Overshoot tolerated by the Clamp policy, relative to the box extent.
EMBED_CLAMP_REL = 1e-9
# Default box padding per side when deriving a lattice box from a mesh.
BOX_INFLATE = 0.02


class OutsidePolicy(Enum):
    """What to do with vertices outside the lattice box during embedding."""

    ERROR = "error"
    CLAMP = "clamp"


class TriMesh:
    """Embedded 2D/3D triangle mesh, possibly with multiple isolated layers.

    Parameters
    ----------
    vertices : (n, 2) or (n, 3) float array
        Rest positions in model units.
    triangles : (m, 3) int array
        Vertex index triples. Indices may be invalid; use
        :func:`validate_mesh` to check before relying on connectivity.
    layer_names, layer_of : optional
        Names of the source layers and a per-vertex layer index. Defaults to
        a single layer called ``"mesh"``.
    """

    def __init__(self, vertices, triangles, layer_names=None, layer_of=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        if self.vertices.ndim != 2 or self.vertices.shape[1] not in (2, 3):
            raise ValueError("vertices must be an (n, 2) or (n, 3) array")
        self.triangles = np.ascontiguousarray(triangles, dtype=np.int64)
        if self.triangles.size == 0:
            self.triangles = self.triangles.reshape(0, 3)
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise ValueError("triangles must be an (m, 3) index array")
        self.dimension = self.vertices.shape[1]
        if layer_names is None:
            layer_names = ("mesh",)
            layer_of = np.zeros(len(self.vertices), dtype=np.int64)
        self.layer_names = tuple(layer_names)
        self.layer_of = np.ascontiguousarray(layer_of, dtype=np.int64)
        if len(self.layer_of) != len(self.vertices):
            raise ValueError("layer_of must assign a layer to every vertex")
        for a in (self.vertices, self.triangles, self.layer_of):
            a.setflags(write=False)
        self._neighbors = None
        self._components = None
        self._edges = None

    # -- basic size / extent -------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def bbox(self):
        """(min_corner, max_corner) of the vertex cloud."""
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def scale(self) -> float:
        """Bounding-box diagonal; the mesh's characteristic length."""
        lo, hi = self.bbox
        return float(np.linalg.norm(hi - lo))

    @property
    def area_scale(self) -> float:
        """Squared bounding-box diagonal, used for relative area thresholds."""
        return self.scale ** 2

    # -- connectivity (requires valid triangle indices) ----------------------

    @property
    def edges(self) -> np.ndarray:
        """Unique undirected edges as an (e, 2) array with i < j."""
        if self._edges is None:
            t = self.triangles
            pairs = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
            pairs = np.sort(pairs, axis=1)
            self._edges = np.unique(pairs, axis=0)
            self._edges.setflags(write=False)
        return self._edges

    @property
    def neighbors(self):
        """One-ring neighbor index arrays, one per vertex."""
        if self._neighbors is None:
            adj = [[] for _ in range(self.n_vertices)]
            for i, j in self.edges:
                adj[i].append(j)
                adj[j].append(i)
            self._neighbors = [np.array(sorted(a), dtype=np.int64) for a in adj]
        return self._neighbors

    @property
    def component_ids(self) -> np.ndarray:
        if self._components is None:
            self._components = split_components(self)
            self._components.setflags(write=False)
        return self._components

    @property
    def n_components(self) -> int:
        ids = self.component_ids
        return int(ids.max()) + 1 if len(ids) else 0

    def triangle_areas(self) -> np.ndarray:
        """Unsigned triangle areas (parallelogram cross-product halved)."""
        v = self.vertices
        t = self.triangles
        e1 = v[t[:, 1]] - v[t[:, 0]]
        e2 = v[t[:, 2]] - v[t[:, 0]]
        if self.dimension == 2:
            cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
            return 0.5 * np.abs(cross)
        return 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)

    def with_vertices(self, vertices) -> "TriMesh":
        """Same topology with replaced vertex positions."""
        m = TriMesh(vertices, self.triangles, self.layer_names, self.layer_of)
        m._neighbors = self._neighbors
        m._components = self._components
        m._edges = self._edges
        return m

    def __repr__(self):
        return (
            f"TriMesh({self.n_vertices} vertices, {self.n_triangles} triangles, "
            f"{self.dimension}D, layers={list(self.layer_names)})"
        )


@dataclass(frozen=True)
class Violation:
    """A single mesh-invariant violation; validation data, not a failure."""

    kind: str
    message: str
    triangle: Optional[int] = None


def validate_mesh(mesh: TriMesh) -> list:
    """Check TriMesh data invariants; an empty list means the mesh is valid.

    Reported kinds: ``bad_index`` (triangle index out of range) and
    ``degenerate_triangle`` (repeated vertex or area below the relative
    floor). Adjacency symmetry and component labeling are derived in one pass
    from the triangle list and hold by construction.
    """
    out = []
    n = mesh.n_vertices
    t = mesh.triangles
    bad = (t < 0) | (t >= n)
    bad_rows = np.flatnonzero(bad.any(axis=1))
    for r in bad_rows:
        out.append(Violation("bad_index", f"triangle {r} references vertex out of range", int(r)))
    ok = np.setdiff1d(np.arange(len(t)), bad_rows, assume_unique=True)
    rep = ok[
        (t[ok, 0] == t[ok, 1]) | (t[ok, 1] == t[ok, 2]) | (t[ok, 0] == t[ok, 2])
    ]
    for r in rep:
        out.append(Violation("degenerate_triangle", f"triangle {r} repeats a vertex", int(r)))
    good = np.setdiff1d(ok, rep, assume_unique=True)
    if len(good):
        sub = TriMesh(mesh.vertices, t[good])
        areas = sub.triangle_areas()
        floor = DEGENERATE_AREA_REL * mesh.area_scale
        for k in np.flatnonzero(areas < floor):
            r = int(good[k])
            out.append(
                Violation(
                    "degenerate_triangle",
                    f"triangle {r} has area {areas[k]:.3e} below floor {floor:.3e}",
                    r,
                )
            )
    return out


def split_components(mesh: TriMesh) -> np.ndarray:
    """Label edge-connected components; labels are dense ints from 0.

    Vertices that appear in no triangle form singleton components.
    """
    n = mesh.n_vertices
    e = mesh.edges
    if len(e) == 0:
        return np.arange(n, dtype=np.int64)
    data = np.ones(len(e))
    adj = sparse.coo_matrix((data, (e[:, 0], e[:, 1])), shape=(n, n))
    _, labels = csgraph.connected_components(adj, directed=False)
    return labels.astype(np.int64)


class LatticeGrid:
    """Tensor-product control lattice over an axis-aligned box.

    Handles are indexed along each axis; the flattened handle index is
    row-major with the last axis varying fastest: ``m * N + n`` for a 2D
    ``(M, N)`` lattice and ``(m * N + n) * K + k`` in 3D. Rest positions are
    the exact regular grid spanning the box.
    """

    def __init__(self, dims, origin, extent, current=None):
        self.dims = tuple(int(d) for d in dims)
        if len(self.dims) not in (2, 3):
            raise ValueError("lattice must be 2D or 3D")
        if any(d < 2 for d in self.dims):
            raise ValueError("every lattice axis needs at least 2 handles")
        self.origin = np.ascontiguousarray(origin, dtype=float)
        self.extent = np.ascontiguousarray(extent, dtype=float)
        if self.origin.shape != (len(self.dims),) or self.extent.shape != (len(self.dims),):
            raise ValueError("origin/extent must match the lattice dimension")
        if np.any(self.extent <= 0):
            raise ValueError("box extent must be strictly positive on every axis")
        axes = [
            self.origin[a] + np.linspace(0.0, 1.0, self.dims[a]) * self.extent[a]
            for a in range(len(self.dims))
        ]
        mesh_axes = np.meshgrid(*axes, indexing="ij")
        self.rest = np.stack([m.reshape(-1) for m in mesh_axes], axis=1)
        if current is None:
            self.current = self.rest.copy()
        else:
            self.current = np.ascontiguousarray(current, dtype=float)
            if self.current.shape != self.rest.shape:
                raise ValueError("current handle positions must be (n_handles, dim)")
        for a in (self.origin, self.extent, self.rest, self.current):
            a.setflags(write=False)

    @classmethod
    def from_mesh(cls, mesh: TriMesh, dims, inflate: float = BOX_INFLATE) -> "LatticeGrid":
        """Lattice box = mesh bounding box inflated per side.

        Flat axes are padded by the same fraction of the largest extent so the
        box stays strictly positive.
        """
        lo, hi = mesh.bbox
        extent = hi - lo
        ref = extent.max() if extent.max() > 0 else 1.0
        pad = inflate * np.where(extent > 0, extent, ref)
        return cls(dims, lo - pad, extent + 2 * pad)

    @property
    def dimension(self) -> int:
        return len(self.dims)

    @property
    def n_handles(self) -> int:
        return int(np.prod(self.dims))

    @property
    def degrees(self):
        """Bernstein degree per axis (handle count minus one)."""
        return tuple(d - 1 for d in self.dims)

    @property
    def scale(self) -> float:
        return float(np.linalg.norm(self.extent))

    def handle_index(self, multi) -> int:
        """Flatten an (m, n[, k]) multi-index."""
        idx = 0
        for a, m in enumerate(multi):
            if not 0 <= m < self.dims[a]:
                raise IndexError(f"handle index {multi} out of range for dims {self.dims}")
            idx = idx * self.dims[a] + int(m)
        return idx

    def handle_multi_index(self, flat: int):
        """Inverse of :meth:`handle_index`."""
        if not 0 <= flat < self.n_handles:
            raise IndexError(f"flat handle index {flat} out of range")
        out = []
        for d in reversed(self.dims):
            out.append(flat % d)
            flat //= d
        return tuple(reversed(out))

    def with_current(self, current) -> "LatticeGrid":
        return LatticeGrid(self.dims, self.origin, self.extent, current=current)

    def __repr__(self):
        return f"LatticeGrid(dims={self.dims}, origin={self.origin.tolist()}, extent={self.extent.tolist()})"


@dataclass
class HandleSet:
    """User-specified targets: mesh-vertex targets and grid-handle targets."""

    vertex: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vertex = {int(k): np.asarray(v, dtype=float) for k, v in self.vertex.items()}
        self.grid = {int(k): np.asarray(v, dtype=float) for k, v in self.grid.items()}

    def copy(self) -> "HandleSet":
        return HandleSet(dict(self.vertex), dict(self.grid))

    def is_empty(self) -> bool:
        return not self.vertex and not self.grid

    def validate(self, mesh: TriMesh, grid: LatticeGrid) -> None:
        """Raise if any id is out of range or a target has the wrong arity."""
        for i, c in self.vertex.items():
            if not 0 <= i < mesh.n_vertices:
                raise IndexError(f"vertex handle id {i} out of range")
            if c.shape != (mesh.dimension,):
                raise ValueError(f"vertex handle {i} target must have {mesh.dimension} coordinates")
        for i, d in self.grid.items():
            if not 0 <= i < grid.n_handles:
                raise IndexError(f"grid handle id {i} out of range")
            if d.shape != (grid.dimension,):
                raise ValueError(f"grid handle {i} target must have {grid.dimension} coordinates")


def embed(mesh, grid: LatticeGrid, policy: OutsidePolicy = OutsidePolicy.ERROR) -> np.ndarray:
    """Map vertices into lattice parameter space, componentwise.

    Returns per-vertex parameters in ``[0, 1]`` per axis. Vertices outside the
    box raise :class:`VertexOutsideGrid` under the Error policy; the Clamp
    policy tolerates (and clamps) overshoots up to ``EMBED_CLAMP_REL`` of the
    extent and raises beyond that.
    """
    verts = mesh.vertices if isinstance(mesh, TriMesh) else np.asarray(mesh, dtype=float)
    if verts.shape[1] != grid.dimension:
        raise ValueError("mesh and lattice dimension mismatch")
    params = (verts - grid.origin) / grid.extent
    overshoot = np.maximum(np.maximum(-params, params - 1.0), 0.0)
    worst = overshoot.max(axis=1) if len(params) else np.zeros(0)
    if len(params) and worst.max() > 0:
        tol = 0.0 if policy is OutsidePolicy.ERROR else EMBED_CLAMP_REL
        if worst.max() > tol:
            bad = int(np.flatnonzero(worst > tol)[0])
            raise VertexOutsideGrid(bad, float(worst[bad]))
        params = np.clip(params, 0.0, 1.0)
    return params
