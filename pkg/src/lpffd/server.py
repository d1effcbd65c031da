"""WebSocket transport for the session service plus static asset serving.

One session per channel; messages are processed strictly in order. Bursts of
queued update messages are drained and coalesced before solving, matching the
manager's batch semantics.
"""
from __future__ import annotations

import asyncio
import json
import logging
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import fixtures
from .sceneio import dumps, load_scene, scene_to_dict
from .service import SessionManager

logger = logging.getLogger(__name__)

# How long to wait for a follow-up frame before solving a pending burst.
_DRAIN_TIMEOUT = 0.002


def create_app(manager: Optional[SessionManager] = None, static_dir=None) -> FastAPI:
    app = FastAPI(title="lpffd session service")
    manager = manager or SessionManager(scene_loader=load_scene)

    @app.get("/api/health")
    def health():
        return {"status": "ok"}

    @app.get("/api/fixtures/{name}")
    def fixture(name: str):
        try:
            mesh = fixtures.by_name(name)
        except FileNotFoundError as exc:
            return JSONResponse({"error": str(exc)}, status_code=404)
        return JSONResponse(scene_to_dict(mesh))

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        pending = None
        try:
            while True:
                if pending is None:
                    pending = asyncio.ensure_future(ws.receive_text())
                await asyncio.wait({pending})
                batch = [json.loads(pending.result())]
                pending = None
                # Drain whatever is already queued; the receive task is kept
                # (never cancelled) so no frame can be lost to a timeout race.
                while True:
                    pending = asyncio.ensure_future(ws.receive_text())
                    done, _ = await asyncio.wait({pending}, timeout=_DRAIN_TIMEOUT)
                    if not done:
                        break
                    batch.append(json.loads(pending.result()))
                    pending = None
                for response in manager.handle_batch(batch):
                    await ws.send_text(dumps(response))
        except WebSocketDisconnect:
            logger.info("websocket closed")
        finally:
            if pending is not None:
                pending.cancel()

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="static")
    return app


def serve(host: str = "127.0.0.1", port: int = 8787, static_dir=None) -> None:
    import uvicorn

    uvicorn.run(create_app(static_dir=static_dir), host=host, port=port, log_level="warning")
