import json

import numpy as np
import pytest

from lpffd import fixtures, sceneio
from lpffd.geometry import LatticeGrid


class TestLosslessJson:
    def test_awkward_floats_round_trip_bit_exactly(self):
        values = [0.1, 1 / 3, np.pi, 1e-300, 1.7976931348623157e308, -0.0, 2.0**-52]
        text = sceneio.dumps({"v": values})
        back = json.loads(text)["v"]
        for a, b in zip(values, back):
            assert float(a) == float(b) and str(float(a)) == str(float(b))

    def test_infinity_tokens(self):
        text = sceneio.dumps([float("inf"), float("-inf")])
        assert json.loads(text) == [float("inf"), float("-inf")]

    def test_nested_structures(self):
        obj = {"a": [1, 2.5, "s", None, True], "b": {"c": [[0.25]]}}
        assert json.loads(sceneio.dumps(obj)) == obj
        assert json.loads(sceneio.dumps(obj, indent=2)) == obj

    def test_numpy_arrays_serialize(self):
        text = sceneio.dumps(np.array([[1.5, 2.5]]))
        assert json.loads(text) == [[1.5, 2.5]]


class TestSceneRoundTrip:
    def test_layered_scene_survives(self, ginger, tmp_path):
        path = tmp_path / "scene.json"
        sceneio.write_json(path, sceneio.scene_to_dict(ginger))
        back = sceneio.load_scene(path)
        assert back.layer_names == ginger.layer_names
        assert np.array_equal(back.vertices, ginger.vertices)
        assert np.array_equal(back.triangles, ginger.triangles)
        assert np.array_equal(back.layer_of, ginger.layer_of)

    def test_deformed_export_uses_given_positions(self, ginger):
        moved = ginger.vertices + 1.0
        d = sceneio.scene_to_dict(ginger, moved)
        back = sceneio.scene_from_dict(d)
        assert np.array_equal(back.vertices, moved)

    def test_fixture_scheme(self):
        mesh = sceneio.load_scene("fixture:bird")
        assert mesh.n_vertices == fixtures.bird().n_vertices

    def test_missing_scene_raises_file_not_found(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            sceneio.load_scene(tmp_path / "missing.json")


class TestGridRoundTrip:
    def test_bit_exact(self, tmp_path):
        rng = np.random.default_rng(0)
        grid = LatticeGrid((4, 7), np.array([0.1, -0.3]), np.array([2.0, np.pi]))
        grid = grid.with_current(grid.rest + rng.normal(size=grid.rest.shape) / 3.0)
        path = tmp_path / "grid.json"
        sceneio.write_json(path, sceneio.grid_to_dict(grid))
        back = sceneio.load_grid(path)
        assert back.dims == grid.dims
        assert np.array_equal(back.origin, grid.origin)
        assert np.array_equal(back.extent, grid.extent)
        assert np.array_equal(back.current, grid.current)
        assert np.array_equal(back.rest, grid.rest)

    def test_double_round_trip_is_stable(self, tmp_path):
        grid = LatticeGrid((3, 3), np.zeros(2), np.array([1.0, 1.0]))
        p1 = tmp_path / "a.json"
        p2 = tmp_path / "b.json"
        sceneio.write_json(p1, sceneio.grid_to_dict(grid))
        sceneio.write_json(p2, sceneio.grid_to_dict(sceneio.load_grid(p1)))
        assert p1.read_bytes() == p2.read_bytes()


class TestObjImport:
    def test_flat_scene_becomes_2d(self, tmp_path):
        path = tmp_path / "tri.obj"
        path.write_text("# comment\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n")
        mesh = sceneio.load_obj(path)
        assert mesh.dimension == 2
        assert mesh.n_triangles == 1

    def test_3d_and_slash_indices(self, tmp_path):
        path = tmp_path / "t.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0.5\nf 1/1/1 2/2/2 3/3/3\n")
        mesh = sceneio.load_obj(path)
        assert mesh.dimension == 3
        assert np.array_equal(mesh.triangles, [[0, 1, 2]])

    def test_non_triangle_face_rejected(self, tmp_path):
        path = tmp_path / "q.obj"
        path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
        with pytest.raises(ValueError):
            sceneio.load_obj(path)


class TestScenario:
    def test_parse_and_final_handles(self):
        data = {
            "scene": "fixture:gingerbread",
            "dims": [10, 10],
            "steps": [
                {"set_vertex": {"1": [0.0, 0.0], "2": [1.0, 1.0]}},
                {"clear_vertex": [1], "set_grid": {"5": [0.5, 0.5]}, "solver": "hsu"},
            ],
        }
        scn = sceneio.scenario_from_dict(data)
        handles = scn.final_handles()
        assert sorted(handles.vertex) == [2]
        assert sorted(handles.grid) == [5]
        assert scn.steps[1].solver == "hsu"

    def test_unknown_solver_rejected(self):
        with pytest.raises(ValueError):
            sceneio.scenario_from_dict({"scene": "x", "dims": [3, 3], "solver": "magic"})
        with pytest.raises(ValueError):
            sceneio.scenario_from_dict(
                {"scene": "x", "dims": [3, 3], "steps": [{"solver": "nope"}]}
            )


class TestEnergyTrace:
    def test_csv_layout(self, tmp_path):
        from lpffd.solver import EnergyBreakdown

        path = tmp_path / "trace.csv"
        sceneio.write_energy_trace(path, [EnergyBreakdown(1.0, 2.0, 3.0, 4.0, 10.0)])
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "iteration,e_ml,e_mp,e_gp,e_gr,total"
        assert lines[1] == "0,1.0,2.0,3.0,4.0,10.0"
