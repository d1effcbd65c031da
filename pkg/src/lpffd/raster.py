"""Raster images and forward-warped image deformation through a lattice.

Images are (h, w, 3) uint8 arrays. The lattice box is the image's model-space
viewport: pixel centers span the box, with row 0 at the top edge. Warping
tessellates the box into quads, pushes the tessellation nodes through the
deformation polynomial, and rasterizes the forward-mapped quads with bilinear
texture sampling; uncovered pixels stay black.
"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from .ffd import build_weights, forward_ffd
from .geometry import LatticeGrid

logger = logging.getLogger(__name__)

# Barycentric tolerance when deciding pixel coverage.
_INSIDE_EPS = 1e-9
DEFAULT_TESS_FACTOR = 8


def read_ppm(path) -> np.ndarray:
    """Read a binary (P6, maxval 255) image."""
    data = Path(path).read_bytes()
    fields = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P6":
        raise ValueError(f"not a binary PPM file: magic {fields[0]!r}")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise ValueError("only maxval 255 PPM images are supported")
    pos += 1  # single whitespace byte after the header
    pixels = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    return pixels.reshape(h, w, 3).copy()


def write_ppm(path, image: np.ndarray) -> None:
    image = np.ascontiguousarray(image, dtype=np.uint8)
    h, w = image.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode())
        f.write(image.tobytes())


def read_image(path) -> np.ndarray:
    path = Path(path)
    if path.suffix.lower() == ".ppm":
        return read_ppm(path)
    from PIL import Image

    return np.asarray(Image.open(path).convert("RGB"))


def write_image(path, image: np.ndarray) -> None:
    path = Path(path)
    if path.suffix.lower() == ".ppm":
        write_ppm(path, image)
        return
    from PIL import Image

    Image.fromarray(np.ascontiguousarray(image, dtype=np.uint8)).save(path)


def _pixel_coords(points: np.ndarray, grid: LatticeGrid, w: int, h: int) -> np.ndarray:
    """Model-space points to pixel-center coordinates (x right, y down)."""
    u = (points[:, 0] - grid.origin[0]) / grid.extent[0]
    v = (points[:, 1] - grid.origin[1]) / grid.extent[1]
    return np.stack([u * w - 0.5, (1.0 - v) * h - 0.5], axis=1)


def tessellation_nodes(grid: LatticeGrid, tess) -> tuple:
    """Tessellation parameters plus their rest and deformed positions.

    ``tess`` is the quad count per axis (int or per-axis pair), at least the
    handle count on each axis. Returns ``(params, rest_points, warped_points)``
    each shaped ``(tx + 1, ty + 1, 2)``.
    """
    if grid.dimension != 2:
        raise ValueError("image warping needs a 2D lattice")
    if np.isscalar(tess):
        tx = ty = int(tess)
    else:
        tx, ty = (int(t) for t in tess)
    if tx < grid.dims[0] or ty < grid.dims[1]:
        raise ValueError(f"tessellation {tx}x{ty} is coarser than the lattice {grid.dims}")
    u = np.linspace(0.0, 1.0, tx + 1)
    v = np.linspace(0.0, 1.0, ty + 1)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    params = np.stack([uu, vv], axis=2)
    flat = params.reshape(-1, 2)
    weights = build_weights(flat, grid.dims)
    rest = forward_ffd(weights, grid.rest).reshape(tx + 1, ty + 1, 2)
    warped = forward_ffd(weights, grid.current).reshape(tx + 1, ty + 1, 2)
    return params, rest, warped


def _bilinear(image: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    h, w = image.shape[:2]
    x = np.clip(x, 0.0, w - 1.0)
    y = np.clip(y, 0.0, h - 1.0)
    x0 = np.clip(np.floor(x).astype(int), 0, w - 2) if w > 1 else np.zeros_like(x, dtype=int)
    y0 = np.clip(np.floor(y).astype(int), 0, h - 2) if h > 1 else np.zeros_like(y, dtype=int)
    fx = (x - x0)[:, None]
    fy = (y - y0)[:, None]
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    img = image.astype(np.float64)
    top = img[y0, x0] * (1 - fx) + img[y0, x1] * fx
    bot = img[y1, x0] * (1 - fx) + img[y1, x1] * fx
    return top * (1 - fy) + bot * fy


def _raster_triangle(out, image, tgt, src) -> None:
    h, w = out.shape[:2]
    d1 = tgt[1] - tgt[0]
    d2 = tgt[2] - tgt[0]
    det = d1[0] * d2[1] - d1[1] * d2[0]
    if abs(det) < 1e-12:
        return
    x_lo = max(int(np.floor(tgt[:, 0].min())), 0)
    x_hi = min(int(np.ceil(tgt[:, 0].max())), w - 1)
    y_lo = max(int(np.floor(tgt[:, 1].min())), 0)
    y_hi = min(int(np.ceil(tgt[:, 1].max())), h - 1)
    if x_lo > x_hi or y_lo > y_hi:
        return
    xs = np.arange(x_lo, x_hi + 1, dtype=float)
    ys = np.arange(y_lo, y_hi + 1, dtype=float)
    gx, gy = np.meshgrid(xs, ys)
    px = gx - tgt[0, 0]
    py = gy - tgt[0, 1]
    l1 = (px * d2[1] - py * d2[0]) / det
    l2 = (d1[0] * py - d1[1] * px) / det
    l0 = 1.0 - l1 - l2
    inside = (l0 >= -_INSIDE_EPS) & (l1 >= -_INSIDE_EPS) & (l2 >= -_INSIDE_EPS)
    if not inside.any():
        return
    sx = l0 * src[0, 0] + l1 * src[1, 0] + l2 * src[2, 0]
    sy = l0 * src[0, 1] + l1 * src[1, 1] + l2 * src[2, 1]
    samples = _bilinear(image, sx[inside], sy[inside])
    rows = (gy[inside]).astype(int)
    cols = (gx[inside]).astype(int)
    out[rows, cols] = np.clip(np.rint(samples), 0, 255).astype(np.uint8)


def warp_image(grid: LatticeGrid, image: np.ndarray, tess=None) -> np.ndarray:
    """Forward-warp ``image`` through the deformed lattice.

    The output raster shares the input's size and viewport. Overlapping
    folds resolve by draw order; background stays black.
    """
    image = np.asarray(image)
    if image.ndim != 3 or image.shape[2] != 3 or image.size == 0:
        raise ValueError("image must be a nonempty (h, w, 3) array")
    if tess is None:
        tess = (DEFAULT_TESS_FACTOR * grid.dims[0], DEFAULT_TESS_FACTOR * grid.dims[1])
    _, rest, warped = tessellation_nodes(grid, tess)
    h, w = image.shape[:2]
    rest_px = _pixel_coords(rest.reshape(-1, 2), grid, w, h).reshape(rest.shape)
    warped_px = _pixel_coords(warped.reshape(-1, 2), grid, w, h).reshape(warped.shape)
    out = np.zeros_like(image)
    tx, ty = rest.shape[0] - 1, rest.shape[1] - 1
    for i in range(tx):
        for j in range(ty):
            quad = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)]
            for tri in ((0, 1, 2), (0, 2, 3)):
                tgt = np.array([warped_px[quad[k]] for k in tri])
                src = np.array([rest_px[quad[k]] for k in tri])
                _raster_triangle(out, image, tgt, src)
    return out
