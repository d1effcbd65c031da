/**
 * Handle hit-testing in screen space. Vertex handles are drawn above grid
 * handles, so they win ties; within one kind the nearest candidate wins.
 */
import { Camera } from "./camera.js";
import { HandleKind, Vec } from "./protocol.js";

export const HIT_RADIUS_PX = 8;

export interface PickResult {
    kind: HandleKind;
    id: number;
    distancePx: number;
}

function nearest(
    positions: Vec[],
    camera: Camera,
    px: number,
    py: number,
    radius: number,
): { id: number; distancePx: number } | null {
    let best: { id: number; distancePx: number } | null = null;
    for (let i = 0; i < positions.length; i++) {
        const s = camera.modelToScreen(positions[i][0], positions[i][1]);
        const d = Math.hypot(s.x - px, s.y - py);
        if (d <= radius && (best === null || d < best.distancePx)) {
            best = { id: i, distancePx: d };
        }
    }
    return best;
}

/**
 * Pick among mesh vertices (draggable as vertex handles) and grid handles.
 * Returns null on empty space.
 */
export function pickHandle(
    vertices: Vec[],
    gridHandles: Vec[],
    camera: Camera,
    px: number,
    py: number,
    radius = HIT_RADIUS_PX,
): PickResult | null {
    const v = nearest(vertices, camera, px, py, radius);
    if (v !== null) {
        return { kind: "vertex", ...v };
    }
    const g = nearest(gridHandles, camera, px, py, radius);
    if (g !== null) {
        return { kind: "grid", ...g };
    }
    return null;
}
