"""Single-threaded timing harness.

Times the lattice solver with and without precomputed weight/Laplacian
matrices, plus both stages of the two-step pipeline, reporting medians over
repeats. BLAS thread pools are pinned to one thread around every timed
region; the solver itself has no internal parallelism.
"""
from __future__ import annotations

import csv
import logging
import statistics
from contextlib import contextmanager
from dataclasses import dataclass
from time import perf_counter

import numpy as np

from .arap import build_laplacian
from .baselines import dgp_inverse_pipeline
from .ffd import build_weights
from .geometry import HandleSet, LatticeGrid, TriMesh, embed
from .solver import SolverConfig, lp_ffd_solve

logger = logging.getLogger(__name__)

try:
    from threadpoolctl import threadpool_limits
except ImportError:  # pragma: no cover
    @contextmanager
    def threadpool_limits(limits=None):
        yield


@dataclass
class BenchRow:
    scene: str
    n_vertices: int
    dims: tuple
    repeats: int
    full_ms: float
    precomputed_ms: float
    local_ms: float
    global_ms: float
    pipeline_stage1_ms: float
    pipeline_stage2_ms: float

    HEADER = (
        "scene,vertices,grid,repeats,lpffd_full_ms,lpffd_precomputed_ms,"
        "lpffd_local_ms,lpffd_global_ms,pipeline_stage1_ms,pipeline_stage2_ms"
    )

    def as_record(self):
        return [
            self.scene,
            self.n_vertices,
            "x".join(str(d) for d in self.dims),
            self.repeats,
            f"{self.full_ms:.4f}",
            f"{self.precomputed_ms:.4f}",
            f"{self.local_ms:.6f}",
            f"{self.global_ms:.6f}",
            f"{self.pipeline_stage1_ms:.4f}",
            f"{self.pipeline_stage2_ms:.4f}",
        ]


def default_bench_handles(mesh: TriMesh) -> HandleSet:
    """Deterministic two-handle stretch used by all timed runs."""
    left = int(np.argmin(mesh.vertices[:, 0]))
    right = int(np.argmax(mesh.vertices[:, 0]))
    lo, hi = mesh.bbox
    shift = np.zeros(mesh.dimension)
    shift[0] = 0.15 * (hi[0] - lo[0])
    handles = HandleSet()
    handles.vertex[left] = mesh.vertices[left] - shift
    handles.vertex[right] = mesh.vertices[right] + shift
    return handles


def bench_scene(
    name: str,
    mesh: TriMesh,
    dims,
    repeats: int = 5,
    config: SolverConfig = SolverConfig(),
) -> BenchRow:
    """Median timings for one (scene, grid size) pair."""
    handles = default_bench_handles(mesh)
    grid = LatticeGrid.from_mesh(mesh, dims)
    full, pre, local, glob, st1, st2 = [], [], [], [], [], []
    with threadpool_limits(limits=1):
        # Warm-up outside the timers (imports, caches, JIT-ish first calls).
        params = embed(mesh, grid)
        weights = build_weights(params, grid.dims)
        laplacian = build_laplacian(mesh, config.laplacian_mode)
        lp_ffd_solve(mesh, grid, weights, laplacian, handles, config)
        dgp_inverse_pipeline(mesh, grid, weights, laplacian, handles, config)
        for _ in range(repeats):
            t0 = perf_counter()
            params = embed(mesh, grid)
            w = build_weights(params, grid.dims)
            lap = build_laplacian(mesh, config.laplacian_mode)
            lp_ffd_solve(mesh, grid, w, lap, handles, config)
            full.append(perf_counter() - t0)

            t0 = perf_counter()
            res = lp_ffd_solve(mesh, grid, weights, laplacian, handles, config)
            pre.append(perf_counter() - t0)
            local.append(statistics.mean(res.wall.local))
            glob.append(statistics.mean(res.wall.global_))

            r = dgp_inverse_pipeline(mesh, grid, weights, laplacian, handles, config)
            st1.append(r.stage1_time)
            st2.append(r.stage2_time)
    ms = lambda xs: 1e3 * statistics.median(xs)
    return BenchRow(
        name,
        mesh.n_vertices,
        tuple(dims),
        repeats,
        ms(full),
        ms(pre),
        ms(local),
        ms(glob),
        ms(st1),
        ms(st2),
    )


def run_bench(scenes, grids, repeats: int = 5, config: SolverConfig = SolverConfig()):
    """All (scene, grid) combinations; ``scenes`` is a list of (name, mesh)."""
    rows = []
    for name, mesh in scenes:
        for dims in grids:
            rows.append(bench_scene(name, mesh, dims, repeats, config))
            logger.info("bench %s %s: full %.2f ms", name, dims, rows[-1].full_ms)
    return rows


def write_bench_csv(path, rows) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(BenchRow.HEADER.split(","))
        for row in rows:
            writer.writerow(row.as_record())
