/**
 * View state: the last received snapshot plus camera-independent UI flags.
 * Snapshots are applied atomically and are the only source of geometry;
 * stale or out-of-order revisions are rejected.
 */
import { Envelope, SnapshotPayload, isError, isSnapshot } from "./protocol.js";

export interface OverlayToggles {
    gridLines: boolean;
    wireframe: boolean;
    heatmap: boolean;
    texture: boolean;
}

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface Selection {
    kind: "vertex" | "grid";
    id: number;
}

export interface ViewState {
    snapshot: SnapshotPayload | null;
    revision: number;
    scene: NonNullable<SnapshotPayload["scene"]> | null;
    distortion: SnapshotPayload["distortion"] | null;
    overlays: OverlayToggles;
    selection: Selection | null;
    status: ConnectionStatus;
    lastError: string | null;
}

export function initialViewState(): ViewState {
    return {
        snapshot: null,
        revision: -1,
        scene: null,
        distortion: null,
        overlays: { gridLines: true, wireframe: true, heatmap: false, texture: false },
        selection: null,
        status: "connecting",
        lastError: null,
    };
}

/** Apply one service message; returns true when the state changed. */
export function applyMessage(state: ViewState, msg: Envelope): boolean {
    if (isError(msg)) {
        state.lastError = `${msg.payload.code}: ${msg.payload.message}`;
        return true;
    }
    if (!isSnapshot(msg)) {
        return false;
    }
    const rev = msg.revision ?? 0;
    if (rev < state.revision) {
        return false; // never regress to an older snapshot
    }
    state.revision = rev;
    state.snapshot = msg.payload;
    // Full snapshots carry the scene and distortion; slim ones keep the last.
    if (msg.payload.scene) {
        state.scene = msg.payload.scene;
    }
    if (msg.payload.distortion) {
        state.distortion = msg.payload.distortion;
    }
    state.lastError = null;
    return true;
}

export function toggleOverlay(state: ViewState, which: keyof OverlayToggles): void {
    state.overlays[which] = !state.overlays[which];
}

/** Map a distortion value to a white->red heat color; zero stays white. */
export function heatColor(value: number, scale = 0.25): string {
    const t = Math.max(0, Math.min(1, Number.isFinite(value) ? value / scale : 1));
    const g = Math.round(235 * (1 - t));
    return `rgb(235,${g},${g})`;
}
