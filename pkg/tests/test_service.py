import json

import numpy as np
import pytest

from lpffd import fixtures, sceneio
from lpffd.cli import main as cli_main
from lpffd.service import SessionManager


@pytest.fixture
def scene_dict(ginger):
    return sceneio.scene_to_dict(ginger)


def create(mgr, scene_dict, session="s", dims=(10, 10)):
    return mgr.handle_message(
        {
            "type": "createSession",
            "payload": {"scene": scene_dict, "dims": list(dims), "session": session},
        }
    )


def move_msg(session, kind, idx, target, solve=True):
    return {
        "type": "updateHandles",
        "session": session,
        "payload": {kind: {"set": {str(idx): list(target)}}, "solveNow": solve},
    }


class TestLifecycle:
    def test_fresh_session_is_at_rest(self, scene_dict, ginger):
        mgr = SessionManager()
        resp = create(mgr, scene_dict)
        assert resp["type"] == "stateSnapshot"
        assert resp["revision"] == 0
        p = resp["payload"]
        assert np.abs(np.asarray(p["vertices"]) - ginger.vertices).max() == 0.0
        assert p["gridCurrent"] == p["gridRest"]
        assert p["distortion"]["angular"] == pytest.approx(0.0, abs=1e-12)

    def test_malformed_scene_is_rejected(self):
        mgr = SessionManager()
        resp = mgr.handle_message(
            {"type": "createSession", "payload": {"scene": {"layers": []}}}
        )
        assert resp["type"] == "error"
        assert "invalid scene" in resp["payload"]["message"]

    def test_invalid_geometry_is_rejected(self):
        mgr = SessionManager()
        bad = {
            "dimension": 2,
            "layers": [{"name": "l", "vertices": [[0, 0], [1, 0], [0, 1]], "triangles": [[0, 1, 9]]}],
        }
        resp = mgr.handle_message({"type": "createSession", "payload": {"scene": bad}})
        assert resp["type"] == "error"

    def test_unknown_session_and_type(self, scene_dict):
        mgr = SessionManager()
        assert mgr.handle_message({"type": "getState", "session": "nope"})["type"] == "error"
        assert mgr.handle_message({"type": "frobnicate"})["type"] == "error"

    def test_revision_counts_mutations(self, scene_dict, ginger):
        mgr = SessionManager()
        create(mgr, scene_dict)
        handles = fixtures.arm_stretch_handles(ginger)
        n = 0
        for i, c in handles.vertex.items():
            resp = mgr.handle_message(move_msg("s", "vertex", i, c))
            n += 1
            assert resp["revision"] == n
        snap = mgr.handle_message({"type": "getState", "session": "s"})
        assert snap["revision"] == n


class TestUpdates:
    def test_rest_handle_leaves_vertices_put(self, scene_dict, ginger):
        mgr = SessionManager()
        create(mgr, scene_dict)
        resp = mgr.handle_message(move_msg("s", "vertex", 3, ginger.vertices[3]))
        out = np.asarray(resp["payload"]["vertices"])
        assert np.abs(out - ginger.vertices).max() <= 1e-6 * ginger.scale

    def test_unknown_id_is_an_error_and_state_survives(self, scene_dict):
        mgr = SessionManager()
        create(mgr, scene_dict)
        before = mgr.handle_message({"type": "getState", "session": "s"})
        resp = mgr.handle_message(move_msg("s", "vertex", 10_000, [0.0, 0.0]))
        assert resp["type"] == "error"
        after = mgr.handle_message({"type": "getState", "session": "s"})
        assert before["revision"] == after["revision"]
        assert before["payload"]["handles"] == after["payload"]["handles"]

    def test_move_only_drags_reuse_the_factorization(self, scene_dict, ginger):
        mgr = SessionManager()
        create(mgr, scene_dict)
        i = int(np.argmax(ginger.vertices[:, 1]))
        base = ginger.vertices[i]
        for k in range(4):
            resp = mgr.handle_message(move_msg("s", "vertex", i, base + [0.0, 0.01 * (k + 1)]))
        cache = resp["payload"]["cache"]
        assert cache == {"hits": 3, "misses": 1}

    def test_batch_coalescing_solves_once(self, scene_dict, ginger):
        mgr = SessionManager()
        create(mgr, scene_dict)
        i = int(np.argmax(ginger.vertices[:, 1]))
        msgs = [move_msg("s", "vertex", i, ginger.vertices[i] + [0.0, 0.02 * k]) for k in (1, 2, 3)]
        out = mgr.handle_batch(msgs)
        assert [o["payload"]["solved"] for o in out] == [False, False, True]
        assert [o["revision"] for o in out] == [1, 2, 3]

    def test_settle_release_restores_the_pre_drag_shape(self, scene_dict, ginger):
        mgr = SessionManager()
        create(mgr, scene_dict, dims=(6, 6))
        i = int(np.argmax(ginger.vertices[:, 0]))
        start = ginger.vertices[i]
        mgr.handle_message(move_msg("s", "vertex", i, start + [0.15, 0.1]))
        back = move_msg("s", "vertex", i, start)
        resp = mgr.handle_message(back)
        drift = np.abs(np.asarray(resp["payload"]["vertices"]) - ginger.vertices).max()
        assert drift > 1e-4  # interactive-depth solve retains warm-start state
        back["payload"]["settle"] = True
        resp = mgr.handle_message(back)
        settled = np.abs(np.asarray(resp["payload"]["vertices"]) - ginger.vertices).max()
        assert settled <= 1e-6 * ginger.scale


class TestReplayDeterminism:
    def _drag_log(self, ginger):
        handles = fixtures.arm_stretch_handles(ginger)
        (i1, c1), (i2, c2) = sorted(handles.vertex.items())
        log = [
            {
                "type": "createSession",
                "payload": {
                    "scene": sceneio.scene_to_dict(ginger),
                    "dims": [10, 10],
                    "session": "replay",
                },
            }
        ]
        # Interpolated drag paths, like pointer moves.
        for t in np.linspace(0.25, 1.0, 4):
            target = ginger.vertices[i1] * (1 - t) + c1 * t
            log.append(move_msg("replay", "vertex", i1, target))
        for t in np.linspace(0.5, 1.0, 2):
            target = ginger.vertices[i2] * (1 - t) + c2 * t
            log.append(move_msg("replay", "vertex", i2, target))
        log.append({"type": "getState", "session": "replay"})
        return log

    def test_identical_final_snapshots(self, ginger):
        snaps = []
        for _ in range(2):
            mgr = SessionManager()
            out = [mgr.handle_message(m) for m in self._drag_log(ginger)]
            snaps.append(json.loads(sceneio.dumps(out[-1])))
        assert snaps[0] == snaps[1]

    def test_replay_matches_batch_cli_solve(self, ginger, tmp_path):
        mgr = SessionManager()
        log = self._drag_log(ginger)
        final = [mgr.handle_message(m) for m in log][-1]
        service_grid = np.asarray(final["payload"]["gridCurrent"])

        scene_path = tmp_path / "scene.json"
        sceneio.write_json(scene_path, sceneio.scene_to_dict(ginger))
        steps = []
        for msg in log:
            if msg["type"] != "updateHandles":
                continue
            block = msg["payload"]["vertex"]["set"]
            steps.append({"set_vertex": {k: v for k, v in block.items()}})
        scn = tmp_path / "scenario.json"
        sceneio.write_json(
            scn, {"scene": str(scene_path), "dims": [10, 10], "solver": "lpffd", "steps": steps}
        )
        out = tmp_path / "out"
        assert cli_main(["solve", "--scenario", str(scn), "--out", str(out)]) == 0
        cli_grid = np.asarray(json.loads((out / "grid.json").read_text())["current"])
        assert np.abs(cli_grid - service_grid).max() <= 1e-9


class TestWebSocketTransport:
    def test_round_trip_over_websocket(self, ginger):
        from fastapi.testclient import TestClient

        from lpffd.server import create_app

        app = create_app()
        client = TestClient(app)
        assert client.get("/api/health").json() == {"status": "ok"}
        fixture_scene = client.get("/api/fixtures/gingerbread")
        assert fixture_scene.status_code == 200
        assert client.get("/api/fixtures/missing").status_code == 404

        with client.websocket_connect("/ws") as ws:
            ws.send_text(
                sceneio.dumps(
                    {
                        "type": "createSession",
                        "payload": {"scene": fixture_scene.json(), "dims": [6, 6], "session": "w"},
                    }
                )
            )
            resp = json.loads(ws.receive_text())
            assert resp["type"] == "stateSnapshot"
            i = int(np.argmax(ginger.vertices[:, 1]))
            ws.send_text(sceneio.dumps(move_msg("w", "vertex", i, [0.5, 1.4])))
            resp = json.loads(ws.receive_text())
            assert resp["type"] == "stateSnapshot"
            assert resp["revision"] == 1
            assert resp["payload"]["solved"] is True
