/**
 * Browser entry: wires the connection, view state, camera, picking, drag
 * controller, toolbar, and render loop together.
 */
import { Camera } from "./camera.js";
import { Connection } from "./connection.js";
import { DragController } from "./drag.js";
import { downloadGrid } from "./exportGrid.js";
import { pickHandle } from "./picking.js";
import {
    SceneJson,
    clearHandleMsg,
    createSessionMsg,
    getStateMsg,
    isSnapshot,
} from "./protocol.js";
import { drawScene } from "./render.js";
import { OverlayToggles, applyMessage, initialViewState, toggleOverlay } from "./state.js";

const canvas = document.getElementById("view") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const statusEl = document.getElementById("status")!;
const state = initialViewState();
const camera = new Camera(canvas.width, canvas.height);
const sessionId = "editor";
let drag: DragController | null = null;
let fitted = false;

function render(): void {
    drawScene(ctx, state, camera);
    const cache = state.snapshot?.cache;
    statusEl.textContent =
        `${state.status} | rev ${state.revision}` +
        (state.distortion
            ? ` | distortion ${state.distortion.angular.toFixed(4)} / ${state.distortion.area.toFixed(4)}`
            : "") +
        (cache ? ` | factorizations ${cache.misses} (reused ${cache.hits})` : "") +
        (state.lastError ? ` | ${state.lastError}` : "");
}

const wsUrl = `${location.protocol === "https:" ? "wss" : "ws"}://${location.host}/ws`;
const conn = new Connection(wsUrl, {
    onOpen: async () => {
        state.status = "open";
        const scene = (await (await fetch("/api/fixtures/gingerbread")).json()) as SceneJson;
        conn.send(createSessionMsg(scene, [10, 10], sessionId));
    },
    onClose: () => {
        state.status = "closed";
        drag?.cancel(); // revert to the last snapshot; nothing else moves geometry
        render();
    },
    onMessage: (msg) => {
        if (applyMessage(state, msg)) {
            if (!fitted && isSnapshot(msg)) {
                const box = msg.payload.gridBox;
                camera.fitBounds(
                    box.origin[0],
                    box.origin[1],
                    box.origin[0] + box.extent[0],
                    box.origin[1] + box.extent[1],
                );
                fitted = true;
            }
            render();
        }
    },
});

canvas.addEventListener("pointerdown", (ev) => {
    const snap = state.snapshot;
    if (!snap || state.status !== "open") {
        return;
    }
    const rect = canvas.getBoundingClientRect();
    const px = ev.clientX - rect.left;
    const py = ev.clientY - rect.top;
    const hit = pickHandle(snap.vertices, snap.gridCurrent, camera, px, py);
    if (!hit) {
        // Empty space: pan, send nothing.
        state.selection = null;
        let last = { x: ev.clientX, y: ev.clientY };
        const onMove = (e: PointerEvent) => {
            camera.panBy(e.clientX - last.x, e.clientY - last.y);
            last = { x: e.clientX, y: e.clientY };
            render();
        };
        const onUp = () => {
            window.removeEventListener("pointermove", onMove);
            window.removeEventListener("pointerup", onUp);
        };
        window.addEventListener("pointermove", onMove);
        window.addEventListener("pointerup", onUp);
        return;
    }
    state.selection = { kind: hit.kind, id: hit.id };
    if (ev.shiftKey) {
        // Shift-click removes an existing handle target.
        const store = hit.kind === "vertex" ? snap.handles.vertex : snap.handles.grid;
        if (String(hit.id) in store) {
            conn.send(clearHandleMsg(sessionId, hit.kind, hit.id));
        }
        render();
        return;
    }
    drag = new DragController(sessionId, (m) => conn.send(m));
    const start = camera.screenToModel(px, py);
    drag.begin(hit.kind, hit.id, { x: start.x, y: start.y, t: performance.now() });
    const onMove = (e: PointerEvent) => {
        const p = camera.screenToModel(e.clientX - rect.left, e.clientY - rect.top);
        drag?.move({ x: p.x, y: p.y, t: performance.now() });
    };
    const onUp = (e: PointerEvent) => {
        const p = camera.screenToModel(e.clientX - rect.left, e.clientY - rect.top);
        drag?.end({ x: p.x, y: p.y, t: performance.now() });
        drag = null;
        window.removeEventListener("pointermove", onMove);
        window.removeEventListener("pointerup", onUp);
    };
    window.addEventListener("pointermove", onMove);
    window.addEventListener("pointerup", onUp);
});

canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    const rect = canvas.getBoundingClientRect();
    camera.zoomAt(ev.clientX - rect.left, ev.clientY - rect.top, ev.deltaY < 0 ? 1.1 : 1 / 1.1);
    render();
});

setInterval(() => drag?.flush(performance.now()), 8);

for (const which of ["gridLines", "wireframe", "heatmap", "texture"] as (keyof OverlayToggles)[]) {
    document.getElementById(`toggle-${which}`)?.addEventListener("click", () => {
        toggleOverlay(state, which);
        if (which === "heatmap" && state.overlays.heatmap) {
            conn.send(getStateMsg(sessionId)); // refresh the distortion report
        }
        render();
    });
}

document.getElementById("export")?.addEventListener("click", () => {
    if (state.snapshot) {
        downloadGrid(state.snapshot);
    }
});

render();
