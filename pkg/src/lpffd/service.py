"""Message-based API for live editing sessions.

Transport-agnostic: a :class:`SessionManager` turns request messages (parsed
JSON dicts) into response messages. Every message carries
``{type, session, revision, payload}``; the manager assigns strictly
increasing revisions per mutation and echoes the revision a response answers,
so a recorded message log replays to an identical final snapshot. The wire
schema is documented in docs/protocol.md.
"""
from __future__ import annotations

import logging
import uuid
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import LpffdError
from .geometry import HandleSet, LatticeGrid, TriMesh, validate_mesh
from .metrics import distortion_report
from .sceneio import scene_from_dict, scene_to_dict
from .solver import SolveResult, SolveSession, SolverConfig

logger = logging.getLogger(__name__)

MSG_CREATE = "createSession"
MSG_UPDATE = "updateHandles"
MSG_GET_STATE = "getState"
MSG_SNAPSHOT = "stateSnapshot"
MSG_ERROR = "error"

# Iteration depth for settle solves (drag release): deep enough that a
# handle returned to its grab point restores the pre-drag shape to ~1e-6.
SETTLE_MAX_ITERATIONS = 400


def _config_from_payload(data: dict) -> SolverConfig:
    cfg = SolverConfig()
    mapping = {
        "lambda_ml": "lam_ml",
        "lambda_mp": "lam_mp",
        "lambda_gp": "lam_gp",
        "lambda_gr": "lam_gr",
        "iterations": "max_iterations",
        "rel_tolerance": "rel_tolerance",
        "laplacian": "laplacian_mode",
    }
    kw = {}
    for key, attr in mapping.items():
        if key in data:
            kw[attr] = type(getattr(cfg, attr))(data[key])
    return cfg.replace(**kw) if kw else cfg


@dataclass
class _Session:
    id: str
    mesh: TriMesh
    solver: SolveSession
    handles: HandleSet = field(default_factory=HandleSet)
    revision: int = 0
    last_result: Optional[SolveResult] = None


class SessionManager:
    """Holds live sessions and processes protocol messages in order.

    One logical worker per session: callers must not interleave messages for
    the same session concurrently. Scene assets are immutable and shared.
    """

    def __init__(self, scene_loader: Optional[Callable[[str], TriMesh]] = None):
        self._sessions: dict = {}
        self._scene_loader = scene_loader

    # -- message entry points -------------------------------------------------

    def handle_message(self, msg: dict) -> dict:
        return self._safe(self._dispatch, msg)

    def handle_batch(self, msgs: list) -> list:
        """Process a burst. Consecutive solveNow updates for the same session
        are coalesced: mutations apply in order, only the last one solves."""
        out = []
        i = 0
        while i < len(msgs):
            msg = msgs[i]
            j = i
            if msg.get("type") == MSG_UPDATE:
                while (
                    j + 1 < len(msgs)
                    and msgs[j + 1].get("type") == MSG_UPDATE
                    and msgs[j + 1].get("session") == msg.get("session")
                ):
                    j += 1
                for k in range(i, j):
                    out.append(self._safe(self._update, msgs[k], solve_override=False))
                out.append(self.handle_message(msgs[j]))
            else:
                out.append(self.handle_message(msg))
            i = j + 1
        return out

    def _safe(self, fn, msg: dict, **kw) -> dict:
        try:
            return fn(msg, **kw)
        except LpffdError as exc:
            return self._error(msg, type(exc).__name__, str(exc))
        except (KeyError, ValueError, IndexError, TypeError) as exc:
            return self._error(msg, "bad_request", str(exc))

    def _dispatch(self, msg: dict) -> dict:
        mtype = msg.get("type")
        if mtype == MSG_CREATE:
            return self._create(msg)
        if mtype == MSG_UPDATE:
            return self._update(msg, solve_override=None)
        if mtype == MSG_GET_STATE:
            return self._get_state(msg)
        return self._error(msg, "bad_request", f"unknown message type {mtype!r}")

    # -- handlers ---------------------------------------------------------------

    def _create(self, msg: dict) -> dict:
        payload = msg.get("payload", {})
        scene = payload.get("scene")
        if isinstance(scene, str):
            if self._scene_loader is None:
                return self._error(msg, "bad_request", "scene references are not enabled")
            mesh = self._scene_loader(scene)
        elif isinstance(scene, dict):
            try:
                mesh = scene_from_dict(scene)
            except (KeyError, ValueError, TypeError) as exc:
                return self._error(msg, "invalid_scene", f"invalid scene: {exc}")
        else:
            return self._error(msg, "invalid_scene", "invalid scene: expected object or name")
        violations = validate_mesh(mesh)
        if violations:
            return self._error(msg, "invalid_scene", f"invalid scene: {violations[0].message}")
        dims = tuple(int(d) for d in payload.get("dims", (10, 10)))
        config = _config_from_payload(payload.get("config", {}))
        grid = LatticeGrid.from_mesh(mesh, dims)
        session = _Session(
            id=payload.get("session") or uuid.uuid4().hex[:12],
            mesh=mesh,
            solver=SolveSession(mesh, grid, config),
        )
        self._sessions[session.id] = session
        logger.info("session %s: %s, grid %s", session.id, mesh, dims)
        return self._snapshot(session, full=True)

    def _session_of(self, msg: dict) -> _Session:
        sid = msg.get("session")
        if sid not in self._sessions:
            raise KeyError(f"unknown session {sid!r}")
        return self._sessions[sid]

    def _update(self, msg: dict, solve_override: Optional[bool]) -> dict:
        session = self._session_of(msg)
        payload = msg.get("payload", {})
        staged = session.handles.copy()
        for kind, store, limit in (
            ("vertex", staged.vertex, session.mesh.n_vertices),
            ("grid", staged.grid, session.solver.grid.n_handles),
        ):
            block = payload.get(kind, {})
            for i in block.get("clear", []):
                if int(i) not in store:
                    raise KeyError(f"unknown {kind} handle id {i}")
                del store[int(i)]
            for i, target in block.get("set", {}).items():
                if not 0 <= int(i) < limit:
                    raise IndexError(f"{kind} handle id {i} out of range")
                store[int(i)] = np.asarray(target, dtype=float)
        staged.validate(session.mesh, session.solver.grid)
        session.handles = staged
        session.revision += 1
        solve_now = payload.get("solveNow", True) if solve_override is None else solve_override
        if solve_now:
            config = session.solver.config
            if payload.get("settle"):
                config = config.replace(max_iterations=SETTLE_MAX_ITERATIONS)
            session.last_result = session.solver.solve(session.handles, config)
        return self._snapshot(session, full=False, solved=bool(solve_now))

    def _get_state(self, msg: dict) -> dict:
        return self._snapshot(self._session_of(msg), full=True)

    # -- responses ----------------------------------------------------------------

    def _snapshot(self, session: _Session, full: bool, solved: bool = True) -> dict:
        solver = session.solver
        grid = solver.grid
        result = session.last_result
        vertices = result.vertex_positions if result is not None else session.mesh.vertices
        payload = {
            "dimension": session.mesh.dimension,
            "gridDims": list(grid.dims),
            "gridBox": {"origin": grid.origin.tolist(), "extent": grid.extent.tolist()},
            "gridRest": grid.rest.tolist(),
            "gridCurrent": grid.current.tolist(),
            "vertices": np.asarray(vertices, dtype=float).tolist(),
            "handles": {
                "vertex": {str(k): session.handles.vertex[k].tolist() for k in sorted(session.handles.vertex)},
                "grid": {str(k): session.handles.grid[k].tolist() for k in sorted(session.handles.grid)},
            },
            "energies": [list(e.as_tuple()) for e in result.energies] if result is not None else [],
            "cache": {"hits": solver.cache_hits, "misses": solver.cache_misses},
            "solved": solved,
        }
        if full:
            report = distortion_report(session.mesh, vertices)
            payload["scene"] = scene_to_dict(session.mesh)
            payload["distortion"] = report.to_dict()
        return {
            "type": MSG_SNAPSHOT,
            "session": session.id,
            "revision": session.revision,
            "payload": payload,
        }

    def _error(self, msg: dict, code: str, message: str) -> dict:
        sid = msg.get("session")
        session = self._sessions.get(sid)
        return {
            "type": MSG_ERROR,
            "session": sid,
            "revision": session.revision if session else None,
            "payload": {"code": code, "message": message},
        }
