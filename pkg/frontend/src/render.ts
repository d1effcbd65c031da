/**
 * Canvas renderer. Geometry comes exclusively from the view state's last
 * snapshot; the camera provides the model-to-screen transform. Vertex
 * handles draw above grid handles (yellow over blue).
 */
import { Camera } from "./camera.js";
import { Vec } from "./protocol.js";
import { ViewState, heatColor } from "./state.js";

const GRID_LINE = "#d06060";
const GRID_HANDLE = "#3a6fd8";
const GRID_HANDLE_SET = "#1b3f94";
const VERTEX_HANDLE = "#e8c21a";
const WIRE = "#777";
const FILL = "#cfe3cf";

function gridIndex(dims: number[], m: number, n: number): number {
    return m * dims[1] + n;
}

export function drawScene(ctx: CanvasRenderingContext2D, state: ViewState, camera: Camera): void {
    ctx.clearRect(0, 0, camera.viewW, camera.viewH);
    const snap = state.snapshot;
    if (!snap || !state.scene) {
        return;
    }
    const verts = snap.vertices;
    const toScreen = (p: Vec) => camera.modelToScreen(p[0], p[1]);

    // Faces: flat fill, heatmap override per triangle.
    let offset = 0;
    let triIndex = 0;
    for (const layer of state.scene.layers) {
        for (const tri of layer.triangles) {
            const a = toScreen(verts[tri[0] + offset]);
            const b = toScreen(verts[tri[1] + offset]);
            const c = toScreen(verts[tri[2] + offset]);
            ctx.beginPath();
            ctx.moveTo(a.x, a.y);
            ctx.lineTo(b.x, b.y);
            ctx.lineTo(c.x, c.y);
            ctx.closePath();
            if (state.overlays.heatmap && state.distortion) {
                const t = state.distortion.perTriangle[triIndex];
                ctx.fillStyle = heatColor(t ? t.angular : 0);
                ctx.fill();
            } else if (state.overlays.texture) {
                ctx.fillStyle = FILL;
                ctx.fill();
            }
            if (state.overlays.wireframe) {
                ctx.strokeStyle = WIRE;
                ctx.lineWidth = 1;
                ctx.stroke();
            }
            triIndex += 1;
        }
        offset += layer.vertices.length;
    }

    // Lattice lines over the current handle positions.
    if (state.overlays.gridLines) {
        const dims = snap.gridDims;
        ctx.strokeStyle = GRID_LINE;
        ctx.lineWidth = 1;
        for (let m = 0; m < dims[0]; m++) {
            ctx.beginPath();
            for (let n = 0; n < dims[1]; n++) {
                const p = toScreen(snap.gridCurrent[gridIndex(dims, m, n)]);
                n === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y);
            }
            ctx.stroke();
        }
        for (let n = 0; n < dims[1]; n++) {
            ctx.beginPath();
            for (let m = 0; m < dims[0]; m++) {
                const p = toScreen(snap.gridCurrent[gridIndex(dims, m, n)]);
                m === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y);
            }
            ctx.stroke();
        }
    }

    // Grid handles below, vertex handles on top.
    for (let i = 0; i < snap.gridCurrent.length; i++) {
        const p = toScreen(snap.gridCurrent[i]);
        ctx.fillStyle = String(i) in snap.handles.grid ? GRID_HANDLE_SET : GRID_HANDLE;
        ctx.beginPath();
        ctx.arc(p.x, p.y, 3.5, 0, 2 * Math.PI);
        ctx.fill();
    }
    for (const [id, target] of Object.entries(snap.handles.vertex)) {
        const at = toScreen(verts[Number(id)]);
        const want = toScreen(target);
        ctx.strokeStyle = VERTEX_HANDLE;
        ctx.lineWidth = 1;
        ctx.beginPath();
        ctx.moveTo(at.x, at.y);
        ctx.lineTo(want.x, want.y);
        ctx.stroke();
        ctx.fillStyle = VERTEX_HANDLE;
        ctx.beginPath();
        ctx.arc(want.x, want.y, 5, 0, 2 * Math.PI);
        ctx.fill();
        ctx.strokeStyle = "#333";
        ctx.stroke();
    }
    if (state.selection) {
        const pos =
            state.selection.kind === "vertex"
                ? verts[state.selection.id]
                : snap.gridCurrent[state.selection.id];
        const p = toScreen(pos);
        ctx.strokeStyle = "#111";
        ctx.beginPath();
        ctx.arc(p.x, p.y, 8, 0, 2 * Math.PI);
        ctx.stroke();
    }
}
