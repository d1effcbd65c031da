import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_weight_matrix, ffd_vertex, ffd_weight_row
from lpffd.ffd import (
    EmbeddingWeights,
    apply_grid,
    bernstein_basis,
    bernstein_row,
    build_weights,
    de_casteljau,
    ffd_point,
    ffd_point_de_casteljau,
    forward_ffd,
)
from lpffd.geometry import LatticeGrid, OutsidePolicy, TriMesh, embed


class TestBernsteinBasis:
    def test_endpoint_values(self):
        assert bernstein_basis(0, 3, 0.0) == 1.0
        assert bernstein_basis(3, 3, 1.0) == 1.0

    def test_midpoint_quadratic(self):
        assert bernstein_basis(1, 2, 0.5) == pytest.approx(0.5, abs=1e-15)

    def test_partition_of_unity_degree_six(self):
        total = sum(bernstein_basis(a, 6, 0.37) for a in range(7))
        assert abs(total - 1.0) <= 1e-14

    def test_index_above_degree_rejected(self):
        with pytest.raises(ValueError):
            bernstein_basis(3, 2, 0.5)
        with pytest.raises(ValueError):
            bernstein_basis(-1, 2, 0.5)

    @given(
        b=st.integers(min_value=0, max_value=20),
        x=st.floats(min_value=0.0, max_value=1.0, allow_nan=False),
    )
    @settings(max_examples=200, deadline=None)
    def test_partition_of_unity_property(self, b, x):
        row = bernstein_row(b, np.array([x]))[0]
        assert abs(row.sum() - 1.0) <= 1e-14
        assert row.min() >= 0.0

    def test_row_matches_scalar_evaluation(self):
        x = 0.7331
        row = bernstein_row(9, np.array([x]))[0]
        expect = [bernstein_basis(a, 9, x) for a in range(10)]
        assert np.abs(row - expect).max() <= 1e-14

    def test_high_degree_stability(self):
        row = bernstein_row(64, np.array([0.31]))[0]
        assert abs(row.sum() - 1.0) <= 1e-12


class TestBuildWeights:
    def test_corner_vertex_hits_corner_handle(self):
        w = build_weights(np.array([[0.0, 0.0]]), (3, 3))
        row = w.row(0)
        assert row[0] == pytest.approx(1.0, abs=1e-15)
        assert row[1:].max() == 0.0

    def test_bilinear_midpoint(self):
        w = build_weights(np.array([[0.5, 0.5]]), (2, 2))
        assert np.allclose(w.row(0), [0.25, 0.25, 0.25, 0.25], atol=1e-15)

    def test_random_vertex_matches_direct_oracle(self):
        rng = np.random.default_rng(5)
        params = rng.uniform(0, 1, (20, 2))
        w = build_weights(params, (10, 10))
        for i in (0, 7, 19):
            assert np.abs(w.row(i) - ffd_weight_row((10, 10), params[i])).max() <= 1e-13

    def test_rows_are_a_partition_of_unity(self):
        rng = np.random.default_rng(6)
        w = build_weights(rng.uniform(0, 1, (100, 2)), (12, 7))
        assert np.abs(w.row_sums() - 1.0).max() <= 1e-12
        assert w.matrix.data.min() >= 0.0 and w.matrix.data.max() <= 1.0

    def test_parameter_outside_unit_box_rejected(self):
        with pytest.raises(ValueError):
            build_weights(np.array([[1.2, 0.0]]), (3, 3))

    def test_trivariate_weights(self):
        rng = np.random.default_rng(7)
        params = rng.uniform(0, 1, (5, 3))
        w = build_weights(params, (4, 3, 5))
        assert np.abs(w.row_sums() - 1.0).max() <= 1e-12
        assert np.abs(w.row(2) - ffd_weight_row((4, 3, 5), params[2])).max() <= 1e-13


class TestForwardFfd:
    def _setup(self, dims=(10, 10), n=40, seed=8):
        rng = np.random.default_rng(seed)
        grid = LatticeGrid(dims, np.array([0.0, 0.0]), np.array([2.0, 1.0]))
        params = rng.uniform(0, 1, (n, 2))
        verts = grid.origin + params * grid.extent
        return grid, params, verts, build_weights(params, dims)

    def test_rest_identity(self):
        grid, _, verts, w = self._setup()
        out = forward_ffd(w, grid.rest)
        assert np.abs(out - verts).max() <= 1e-9 * grid.scale

    def test_translation_carries_through(self):
        grid, _, verts, w = self._setup()
        t = np.array([0.3, -1.7])
        out = forward_ffd(w, grid.rest + t)
        assert np.abs(out - (verts + t)).max() <= 1e-12 * max(1.0, np.abs(verts).max())

    def test_displaced_handle_matches_direct_evaluation(self):
        grid, params, _, w = self._setup()
        P = grid.rest.copy()
        P[grid.handle_index((4, 5))] += np.array([0.2, 0.1])
        deformed = grid.with_current(P)
        out = forward_ffd(w, P)
        for i in (0, 13, 39):
            assert np.abs(out[i] - ffd_vertex(deformed, params[i])).max() <= 1e-12

    def test_dimension_mismatch_rejected(self):
        _, _, _, w = self._setup()
        with pytest.raises(ValueError):
            forward_ffd(w, np.zeros((w.n_handles + 1, 2)))

    def test_affine_invariance(self):
        grid, _, _, w = self._setup(seed=9)
        rng = np.random.default_rng(10)
        A = rng.normal(size=(2, 2))
        t = rng.normal(size=2)
        P = grid.rest + rng.normal(scale=0.1, size=grid.rest.shape)
        lhs = forward_ffd(w, P @ A.T + t)
        rhs = forward_ffd(w, P) @ A.T + t
        assert np.abs(lhs - rhs).max() <= 1e-12 * max(1.0, np.abs(rhs).max())


class TestPolynomialEvaluation:
    def test_de_casteljau_matches_direct_sum(self):
        rng = np.random.default_rng(11)
        grid = LatticeGrid((6, 5), np.zeros(2), np.array([1.0, 1.0]))
        grid = grid.with_current(grid.rest + rng.normal(scale=0.2, size=grid.rest.shape))
        for p in rng.uniform(0, 1, (25, 2)):
            a = ffd_point(grid, p)
            b = ffd_point_de_casteljau(grid, p)
            assert np.abs(a - b).max() <= 1e-12
        grid3 = LatticeGrid((3, 4, 3), np.zeros(3), np.ones(3))
        grid3 = grid3.with_current(grid3.rest + rng.normal(scale=0.1, size=grid3.rest.shape))
        for p in rng.uniform(0, 1, (10, 3)):
            assert np.abs(ffd_point(grid3, p) - ffd_point_de_casteljau(grid3, p)).max() <= 1e-12

    def test_scalar_de_casteljau(self):
        # Degree-2 curve evaluated at the midpoint.
        control = np.array([[0.0, 0.0], [1.0, 2.0], [2.0, 0.0]])
        assert np.allclose(de_casteljau(control, 0.5), [1.0, 1.0])


class TestApplyGrid:
    def _scene(self):
        verts = np.array([[0.2, 0.2], [0.8, 0.2], [0.5, 0.8]])
        return TriMesh(verts, np.array([[0, 1, 2]]))

    def test_rest_grid_leaves_scene_unchanged(self):
        scene = self._scene()
        grid = LatticeGrid((4, 4), np.zeros(2), np.ones(2))
        out = apply_grid(grid, scene)
        assert np.abs(out - scene.vertices).max() <= 1e-12

    def test_translated_grid_translates_scene(self):
        scene = self._scene()
        grid = LatticeGrid((4, 4), np.zeros(2), np.ones(2))
        t = np.array([1.5, -0.5])
        out = apply_grid(grid.with_current(grid.rest + t), scene)
        assert np.abs(out - (scene.vertices + t)).max() <= 1e-12

    def test_matches_forward_ffd_on_same_mesh(self):
        scene = self._scene()
        grid = LatticeGrid((4, 4), np.zeros(2), np.ones(2))
        rng = np.random.default_rng(12)
        grid = grid.with_current(grid.rest + rng.normal(scale=0.05, size=grid.rest.shape))
        params = embed(scene, grid)
        w = build_weights(params, grid.dims)
        assert np.allclose(apply_grid(grid, scene), forward_ffd(w, grid.current), atol=0)

    def test_outside_scene_raises(self):
        scene = self._scene()
        grid = LatticeGrid((4, 4), np.zeros(2), np.array([0.6, 1.0]))
        with pytest.raises(Exception) as exc:
            apply_grid(grid, scene)
        assert "outside" in str(exc.value)
