import numpy as np
import pytest

from oracles import (
    brute_force_best_angle_energy,
    dense_laplacian,
    one_ring_energy,
    reference_arap_solve,
    rotation_2d,
)
from lpffd import fixtures
from lpffd.arap import (
    LaplacianMatrix,
    align_rotations,
    build_laplacian,
    dgp_energy,
    dgp_solve,
    differential_coords,
    fit_rotations,
    rotate_rows,
)
from lpffd.geometry import TriMesh

# Edge weight of an equilateral triangle in cotangent mode: half the
# cotangent of 60 degrees, hand-evaluated.
EQUILATERAL_COT_WEIGHT = 0.28867513459481287


def equilateral():
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3.0) / 2.0]])
    return TriMesh(verts, np.array([[0, 1, 2]]))


class TestBuildLaplacian:
    def test_uniform_edge_structure(self, strip_mesh):
        L = build_laplacian(strip_mesh, "uniform").matrix.toarray()
        for i in range(strip_mesh.n_vertices):
            nbrs = strip_mesh.neighbors[i]
            assert L[i, i] == len(nbrs)
            for j in nbrs:
                assert L[i, j] == -1.0

    @pytest.mark.parametrize("mode", ["uniform", "cotangent"])
    def test_row_sums_vanish(self, ginger, mode):
        L = build_laplacian(ginger, mode).matrix
        assert np.abs(np.asarray(L.sum(axis=1))).max() <= 1e-12

    def test_equilateral_cotangent_weight(self):
        lap = build_laplacian(equilateral(), "cotangent")
        assert np.allclose(lap.edge_weights, EQUILATERAL_COT_WEIGHT, atol=1e-14)

    @pytest.mark.parametrize("mode", ["uniform", "cotangent"])
    def test_matches_dense_oracle(self, ginger, mode):
        L = build_laplacian(ginger, mode).matrix.toarray()
        assert np.abs(L - dense_laplacian(ginger, mode)).max() <= 1e-12

    def test_symmetric_with_nonpositive_offdiagonals(self, ginger):
        L = build_laplacian(ginger, "cotangent").matrix.toarray()
        assert np.abs(L - L.T).max() <= 1e-12
        off = L - np.diag(np.diag(L))
        assert off.max() <= 0.0

    def test_blocks_respect_components(self, ginger):
        L = build_laplacian(ginger).matrix.toarray()
        comp = ginger.component_ids
        different = comp[:, None] != comp[None, :]
        assert np.abs(L[different]).max() == 0.0

    def test_degenerate_triangle_rejected_in_cotangent_mode(self):
        mesh = TriMesh(
            np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]]),
            np.array([[0, 1, 3], [0, 1, 2]]),
        )
        with pytest.raises(ValueError, match="triangle 1"):
            build_laplacian(mesh, "cotangent")

    def test_unknown_mode_rejected(self, quad_mesh):
        with pytest.raises(ValueError):
            build_laplacian(quad_mesh, "graph")


class TestDifferentialCoords:
    def test_symmetric_star_center_vanishes(self):
        ang = np.linspace(0, 2 * np.pi, 6, endpoint=False)
        ring = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        verts = np.vstack([[0.0, 0.0], ring])
        tris = np.array([[0, 1 + i, 1 + (i + 1) % 6] for i in range(6)])
        mesh = TriMesh(verts, tris)
        lap = build_laplacian(mesh)
        delta = differential_coords(lap, mesh.vertices)
        assert np.abs(delta[0]).max() <= 1e-12

    def test_translation_invariance(self, ginger):
        lap = build_laplacian(ginger)
        d0 = differential_coords(lap, ginger.vertices)
        d1 = differential_coords(lap, ginger.vertices + np.array([3.0, -2.0]))
        assert np.abs(d0 - d1).max() <= 1e-10

    def test_matches_dense_multiply(self, ginger):
        lap = build_laplacian(ginger)
        rng = np.random.default_rng(0)
        V = rng.normal(size=ginger.vertices.shape)
        assert np.abs(differential_coords(lap, V) - dense_laplacian(ginger) @ V).max() <= 1e-12


class TestFitRotations:
    def test_identity_at_rest(self, ginger):
        lap = build_laplacian(ginger)
        R = fit_rotations(ginger, lap, ginger.vertices, ginger.vertices)
        assert np.abs(R - np.eye(2)).max() <= 1e-12

    def test_recovers_global_rotation(self, ginger):
        lap = build_laplacian(ginger)
        Rot = rotation_2d(np.deg2rad(30))
        R = fit_rotations(ginger, lap, ginger.vertices, ginger.vertices @ Rot.T)
        assert np.abs(R - Rot).max() <= 1e-9

    def test_recovers_global_rotation_3d(self, sphere):
        lap = build_laplacian(sphere)
        theta = 0.4
        Rot = np.array(
            [
                [np.cos(theta), -np.sin(theta), 0.0],
                [np.sin(theta), np.cos(theta), 0.0],
                [0.0, 0.0, 1.0],
            ]
        )
        R = fit_rotations(sphere, lap, sphere.vertices, sphere.vertices @ Rot.T)
        assert np.abs(R - Rot).max() <= 1e-9

    def test_rotations_are_proper(self, sphere):
        lap = build_laplacian(sphere)
        rng = np.random.default_rng(1)
        Vc = sphere.vertices + rng.normal(scale=0.05, size=sphere.vertices.shape)
        R = fit_rotations(sphere, lap, sphere.vertices, Vc)
        orth = np.matmul(R.transpose(0, 2, 1), R) - np.eye(3)
        assert np.abs(orth).max() <= 1e-9
        assert np.abs(np.linalg.det(R) - 1.0).max() <= 1e-9

    def test_beats_brute_force_angle_grid(self, strip_mesh):
        lap = build_laplacian(strip_mesh)
        rng = np.random.default_rng(2)
        Vc = strip_mesh.vertices + rng.normal(scale=0.2, size=strip_mesh.vertices.shape)
        R = fit_rotations(strip_mesh, lap, strip_mesh.vertices, Vc)
        for i in range(strip_mesh.n_vertices):
            nbrs = strip_mesh.neighbors[i]
            e = strip_mesh.vertices[i] - strip_mesh.vertices[nbrs]
            ec = Vc[i] - Vc[nbrs]
            w = np.ones(len(nbrs))
            mine = one_ring_energy(e, ec, w, R[i])
            best = brute_force_best_angle_energy(e, ec, w, step=1e-4)
            assert mine <= best + 1e-12

    def test_invariant_to_uniform_weight_scaling(self, ginger):
        lap = build_laplacian(ginger)
        scaled = LaplacianMatrix(
            lap.matrix * 7.5, lap.mode, lap.edges, lap.edge_weights * 7.5
        )
        rng = np.random.default_rng(3)
        Vc = ginger.vertices + rng.normal(scale=0.03, size=ginger.vertices.shape)
        R1 = fit_rotations(ginger, lap, ginger.vertices, Vc)
        R2 = fit_rotations(ginger, scaled, ginger.vertices, Vc)
        assert np.abs(R1 - R2).max() <= 1e-12

    def test_degenerate_one_ring_yields_identity(self):
        mesh = TriMesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.5, 1.0]]), np.array([[0, 1, 2]]))
        lap = build_laplacian(mesh)
        collapsed = np.zeros_like(mesh.vertices)
        R = fit_rotations(mesh, lap, collapsed, mesh.vertices)
        assert np.abs(R - np.eye(2)).max() == 0.0


class TestAlignRotations:
    def test_aligns_vectors_2d(self):
        rng = np.random.default_rng(4)
        a = rng.normal(size=(50, 2))
        b = rng.normal(size=(50, 2))
        R = align_rotations(a, b)
        out = rotate_rows(R, a)
        cos = np.einsum("ij,ij->i", out, b) / (
            np.linalg.norm(out, axis=1) * np.linalg.norm(b, axis=1)
        )
        assert cos.min() >= 1.0 - 1e-12

    def test_aligns_vectors_3d_including_antiparallel(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=(50, 3))
        b = np.vstack([rng.normal(size=(48, 3)), -a[48] * 2.0, a[49] * 3.0])
        R = align_rotations(a, b)
        assert np.abs(np.linalg.det(R) - 1.0).max() <= 1e-9
        out = rotate_rows(R, a)
        cos = np.einsum("ij,ij->i", out, b) / (
            np.linalg.norm(out, axis=1) * np.linalg.norm(b, axis=1)
        )
        assert cos.min() >= 1.0 - 1e-9

    def test_zero_rows_get_identity(self):
        R = align_rotations(np.zeros((2, 2)), np.array([[1.0, 0.0], [0.0, 0.0]]))
        assert np.abs(R - np.eye(2)).max() == 0.0


class TestDgpSolve:
    def test_rest_targets_are_a_fixed_point(self, ginger):
        lap = build_laplacian(ginger)
        handles = {1: ginger.vertices[1].copy(), 50: ginger.vertices[50].copy()}
        res = dgp_solve(ginger, lap, handles)
        assert np.abs(res.vertices - ginger.vertices).max() <= 1e-9

    def test_fully_constrained_rigid_motion_is_exact(self, quad_mesh):
        lap = build_laplacian(quad_mesh)
        Rot = rotation_2d(np.deg2rad(47))
        targets = {i: Rot @ quad_mesh.vertices[i] for i in range(quad_mesh.n_vertices)}
        res = dgp_solve(quad_mesh, lap, targets)
        expect = quad_mesh.vertices @ Rot.T
        assert np.abs(res.vertices - expect).max() == 0.0

    def test_energy_is_non_increasing(self, ginger):
        lap = build_laplacian(ginger)
        handles = fixtures.arm_stretch_handles(ginger).vertex
        res = dgp_solve(ginger, lap, handles, iterations=8)
        for a, b in zip(res.energies, res.energies[1:]):
            assert b <= a * (1 + 1e-9) + 1e-30

    def test_strip_matches_dense_reference(self, strip_mesh):
        lap = build_laplacian(strip_mesh)
        handles = {0: strip_mesh.vertices[0] + np.array([0.0, 0.6])}
        res = dgp_solve(strip_mesh, lap, handles, iterations=5, rel_tolerance=0.0)
        _, ref_energies = reference_arap_solve(strip_mesh, handles, iterations=5)
        assert res.energies[-1] == pytest.approx(ref_energies[-1], abs=1e-8)

    def test_unconstrained_component_is_anchored(self, ginger):
        lap = build_laplacian(ginger)
        handles = fixtures.arm_stretch_handles(ginger).vertex  # body layer only
        res = dgp_solve(ginger, lap, handles)
        eyes_mouth = np.flatnonzero(ginger.layer_of != 0)
        assert np.abs(res.vertices[eyes_mouth] - ginger.vertices[eyes_mouth]).max() == 0.0
        assert len(res.anchored_components) == 3

    def test_rigid_motion_reproduction(self, bird):
        lap = build_laplacian(bird)
        Rot = rotation_2d(0.3)
        t = np.array([0.5, -0.2])
        ids = [0, bird.n_vertices // 3, 2 * bird.n_vertices // 3, bird.n_vertices - 1]
        handles = {i: Rot @ bird.vertices[i] + t for i in ids}
        res = dgp_solve(bird, lap, handles, iterations=150, rel_tolerance=0.0)
        assert res.energies[-1] <= 1e-8 * bird.scale**2


class TestDgpEnergy:
    def test_matches_definition(self, strip_mesh):
        lap = build_laplacian(strip_mesh)
        rng = np.random.default_rng(6)
        Vc = strip_mesh.vertices + rng.normal(scale=0.1, size=strip_mesh.vertices.shape)
        R = fit_rotations(strip_mesh, lap, strip_mesh.vertices, Vc)
        total = 0.0
        for i in range(strip_mesh.n_vertices):
            for j in strip_mesh.neighbors[i]:
                res = (Vc[i] - Vc[j]) - R[i] @ (strip_mesh.vertices[i] - strip_mesh.vertices[j])
                total += float(res @ res)
        assert dgp_energy(lap, strip_mesh.vertices, Vc, R) == pytest.approx(total, rel=1e-12)
