"""Procedural test scenes.

Everything here is deterministic: scenes are sampled from implicit shape
unions on a jittered grid with fixed seeds, so fixtures can be regenerated
identically anywhere (tests and the CLI's ``fixture:<name>`` scheme rely on
that).
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import Delaunay

from .geometry import DEGENERATE_AREA_REL, HandleSet, TriMesh, split_components


# -- implicit shapes -----------------------------------------------------------

def _circle(c, r):
    c = np.asarray(c, dtype=float)
    return lambda p: np.linalg.norm(p - c, axis=1) <= r


def _ellipse(c, rx, ry):
    c = np.asarray(c, dtype=float)
    return lambda p: ((p[:, 0] - c[0]) / rx) ** 2 + ((p[:, 1] - c[1]) / ry) ** 2 <= 1.0


def _capsule(a, b, r):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = b - a
    denom = float(ab @ ab)

    def inside(p):
        t = np.clip(((p - a) @ ab) / denom, 0.0, 1.0)
        closest = a + t[:, None] * ab
        return np.linalg.norm(p - closest, axis=1) <= r

    return inside


def _union(*shapes):
    def inside(p):
        mask = np.zeros(len(p), dtype=bool)
        for s in shapes:
            mask |= s(p)
        return mask

    return inside


def _sample_blob(inside, bbox, spacing, seed, keep_largest=True) -> TriMesh:
    """Triangulate the interior of an implicit shape from a jittered grid."""
    (x0, y0), (x1, y1) = bbox
    xs = np.arange(x0, x1 + spacing / 2, spacing)
    ys = np.arange(y0, y1 + spacing / 2, spacing)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.stack([gx.reshape(-1), gy.reshape(-1)], axis=1)
    rng = np.random.default_rng(seed)
    pts = pts + rng.uniform(-0.25, 0.25, pts.shape) * spacing
    pts = pts[inside(pts)]
    tri = Delaunay(pts)
    cells = tri.simplices
    centroids = pts[cells].mean(axis=1)
    cells = cells[inside(centroids)]
    e1 = pts[cells[:, 1]] - pts[cells[:, 0]]
    e2 = pts[cells[:, 2]] - pts[cells[:, 0]]
    areas = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    floor = max(DEGENERATE_AREA_REL * float(np.sum((hi - lo) ** 2)), 1e-6 * spacing**2)
    cells = cells[areas > floor]
    used = np.unique(cells)
    remap = -np.ones(len(pts), dtype=np.int64)
    remap[used] = np.arange(len(used))
    mesh = TriMesh(pts[used], remap[cells])
    if keep_largest and mesh.n_components > 1:
        ids = split_components(mesh)
        counts = np.bincount(ids)
        keep = np.flatnonzero(ids == int(np.argmax(counts)))
        remap = -np.ones(mesh.n_vertices, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        tri_mask = np.isin(mesh.triangles[:, 0], keep)
        mesh = TriMesh(mesh.vertices[keep], remap[mesh.triangles[tri_mask]])
    return mesh


def _disk_fan(center, r, segments=8):
    center = np.asarray(center, dtype=float)
    ang = np.linspace(0, 2 * np.pi, segments, endpoint=False)
    ring = center + r * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    verts = np.vstack([center, ring])
    tris = [[0, 1 + i, 1 + (i + 1) % segments] for i in range(segments)]
    return verts, np.asarray(tris, dtype=np.int64)


def _arc_band(center, r_in, r_out, a0, a1, segments=6):
    center = np.asarray(center, dtype=float)
    ang = np.linspace(a0, a1, segments + 1)
    d = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    inner = center + r_in * d
    outer = center + r_out * d
    verts = np.vstack([inner, outer])
    n = segments + 1
    tris = []
    for i in range(segments):
        tris.append([i, n + i, i + 1])
        tris.append([i + 1, n + i, n + i + 1])
    return verts, np.asarray(tris, dtype=np.int64)


def _stack_layers(layers) -> TriMesh:
    names, verts, tris, layer_of = [], [], [], []
    offset = 0
    for name, v, t in layers:
        names.append(name)
        verts.append(np.asarray(v, dtype=float))
        tris.append(np.asarray(t, dtype=np.int64) + offset)
        layer_of.append(np.full(len(v), len(names) - 1, dtype=np.int64))
        offset += len(v)
    return TriMesh(np.concatenate(verts), np.concatenate(tris), names, np.concatenate(layer_of))


# -- scenes --------------------------------------------------------------------

def gingerbread_man() -> TriMesh:
    """Layered cookie figure: a body plus two eyes and a mouth as isolated
    layers (four edge-connected components, ~225 vertices)."""
    body_shape = _union(
        _circle((0.5, 1.02), 0.175),
        _ellipse((0.5, 0.62), 0.21, 0.30),
        _capsule((0.36, 0.78), (0.12, 0.88), 0.07),
        _capsule((0.64, 0.78), (0.88, 0.88), 0.07),
        _capsule((0.43, 0.38), (0.30, 0.08), 0.085),
        _capsule((0.57, 0.38), (0.70, 0.08), 0.085),
    )
    body = _sample_blob(body_shape, ((0.0, 0.0), (1.0, 1.25)), 0.05, seed=11)
    eye_l = _disk_fan((0.435, 1.06), 0.030)
    eye_r = _disk_fan((0.565, 1.06), 0.030)
    mouth = _arc_band((0.5, 1.01), 0.055, 0.080, np.pi * 1.15, np.pi * 1.85)
    return _stack_layers(
        [
            ("body", body.vertices, body.triangles),
            ("eye_left", *eye_l),
            ("eye_right", *eye_r),
            ("mouth", *mouth),
        ]
    )


def bird() -> TriMesh:
    """Single-component blob (ellipse body, round head, tail), ~200 vertices."""
    shape = _union(
        _ellipse((0.48, 0.45), 0.28, 0.18),
        _circle((0.74, 0.60), 0.11),
        _capsule((0.24, 0.48), (0.08, 0.62), 0.05),
        _capsule((0.82, 0.60), (0.92, 0.58), 0.03),
    )
    return _sample_blob(shape, ((0.0, 0.2), (1.0, 0.8)), 0.031, seed=7)


def flag_scene() -> TriMesh:
    """Small 7x3 quad sheet (21 vertices) matching the flag image extent."""
    nx, ny = 7, 3
    xs = np.linspace(0.0, 1.0, nx)
    ys = np.linspace(0.0, 0.6, ny)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    verts = np.stack([gx.reshape(-1), gy.reshape(-1)], axis=1)
    tris = []
    for i in range(nx - 1):
        for j in range(ny - 1):
            a = i * ny + j
            b = (i + 1) * ny + j
            tris.append([a, b, b + 1])
            tris.append([a, b + 1, a + 1])
    return TriMesh(verts, np.asarray(tris, dtype=np.int64), ("flag",), np.zeros(len(verts), dtype=np.int64))


def flag_image(width: int = 90, height: int = 60) -> np.ndarray:
    """Tricolor banner with a disk emblem, as an (h, w, 3) uint8 raster."""
    img = np.zeros((height, width, 3), dtype=np.uint8)
    thirds = height // 3
    img[:thirds] = (200, 40, 40)
    img[thirds : 2 * thirds] = (240, 240, 240)
    img[2 * thirds :] = (40, 60, 180)
    yy, xx = np.mgrid[0:height, 0:width]
    emblem = (xx - width * 0.3) ** 2 + (yy - height * 0.5) ** 2 <= (height * 0.18) ** 2
    img[emblem] = (250, 210, 60)
    return img


def sphere_scene(rings: int = 20, segments: int = 25) -> TriMesh:
    """Surface sphere with ``rings * segments + 2`` vertices (~500)."""
    verts = [np.array([0.0, 0.0, 1.0])]
    for i in range(1, rings + 1):
        phi = np.pi * i / (rings + 1)
        for j in range(segments):
            theta = 2 * np.pi * j / segments
            verts.append(
                np.array(
                    [np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)]
                )
            )
    verts.append(np.array([0.0, 0.0, -1.0]))
    v = np.asarray(verts)
    tris = []
    for j in range(segments):
        tris.append([0, 1 + j, 1 + (j + 1) % segments])
    for i in range(rings - 1):
        a0 = 1 + i * segments
        b0 = 1 + (i + 1) * segments
        for j in range(segments):
            j1 = (j + 1) % segments
            tris.append([a0 + j, b0 + j, b0 + j1])
            tris.append([a0 + j, b0 + j1, a0 + j1])
    last = len(v) - 1
    c0 = 1 + (rings - 1) * segments
    for j in range(segments):
        tris.append([last, c0 + (j + 1) % segments, c0 + j])
    return TriMesh(v, np.asarray(tris, dtype=np.int64), ("sphere",), np.zeros(len(v), dtype=np.int64))


def random_scene(seed: int, n_vertices: int) -> TriMesh:
    """Delaunay triangulation of random points in a unit-ish box."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, 1.0, (n_vertices, 2))
    tri = Delaunay(pts)
    cells = tri.simplices
    e1 = pts[cells[:, 1]] - pts[cells[:, 0]]
    e2 = pts[cells[:, 2]] - pts[cells[:, 0]]
    areas = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    cells = cells[areas > 10 * DEGENERATE_AREA_REL * 2.0]
    return TriMesh(pts, cells)


def arm_stretch_handles(mesh: TriMesh, amount: float = 0.3) -> HandleSet:
    """Scripted two-vertex-handle stretch: both arm tips raised.

    Grabs the leftmost and rightmost vertices of the first layer and drags
    the targets upward (with a slight inward pull) by ``amount`` of the mesh
    width. Rotation-heavy edits like this are where locality preservation
    pays off most against the no-locality baselines.
    """
    body = np.flatnonzero(mesh.layer_of == 0)
    x = mesh.vertices[body, 0]
    left = int(body[np.argmin(x)])
    right = int(body[np.argmax(x)])
    lo, hi = mesh.bbox
    shift = amount * (hi[0] - lo[0])
    handles = HandleSet()
    handles.vertex[left] = mesh.vertices[left] + np.array([0.3 * shift, shift])
    handles.vertex[right] = mesh.vertices[right] + np.array([-0.3 * shift, shift])
    return handles


_BY_NAME = {
    "gingerbread": gingerbread_man,
    "bird": bird,
    "flag": flag_scene,
    "sphere": sphere_scene,
}


def by_name(name: str) -> TriMesh:
    try:
        return _BY_NAME[name]()
    except KeyError:
        raise FileNotFoundError(f"unknown fixture {name!r}; choices: {sorted(_BY_NAME)}") from None
