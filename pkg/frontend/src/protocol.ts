/**
 * Wire types for the session service (see docs/protocol.md in the repo root).
 * The editor is a pure view of service snapshots: every rendered position
 * comes from the last stateSnapshot, never from client-side simulation.
 */

export type Vec = number[]; // [x, y] or [x, y, z]

export interface Envelope<T = unknown> {
    type: string;
    session?: string | null;
    revision?: number | null;
    payload: T;
}

export interface SceneLayer {
    name: string;
    vertices: Vec[];
    triangles: number[][];
}

export interface SceneJson {
    dimension: number;
    layers: SceneLayer[];
}

export interface DistortionTriangle {
    s1: number;
    s2: number;
    angular: number;
    area: number;
    restArea: number;
}

export interface DistortionJson {
    angular: number;
    area: number;
    degenerate: number[];
    perTriangle: DistortionTriangle[];
}

export interface SnapshotPayload {
    dimension: number;
    gridDims: number[];
    gridBox: { origin: number[]; extent: number[] };
    gridRest: Vec[];
    gridCurrent: Vec[];
    vertices: Vec[];
    handles: { vertex: Record<string, Vec>; grid: Record<string, Vec> };
    energies: number[][];
    cache: { hits: number; misses: number };
    solved: boolean;
    scene?: SceneJson;
    distortion?: DistortionJson;
}

export interface ErrorPayload {
    code: string;
    message: string;
}

export type Snapshot = Envelope<SnapshotPayload>;

export interface HandleEdit {
    set?: Record<string, Vec>;
    clear?: number[];
}

export interface UpdatePayload {
    vertex?: HandleEdit;
    grid?: HandleEdit;
    solveNow?: boolean;
    /** Drag release: ask the service for a deep (settling) solve. */
    settle?: boolean;
}

export type HandleKind = "vertex" | "grid";

export function createSessionMsg(
    scene: SceneJson,
    dims: number[],
    session: string,
    config?: Record<string, number | string>,
): Envelope {
    return { type: "createSession", payload: { scene, dims, session, config } };
}

export function updateHandlesMsg(
    session: string,
    kind: HandleKind,
    id: number,
    target: Vec,
    solveNow = true,
    settle = false,
): Envelope<UpdatePayload> {
    const payload: UpdatePayload = { [kind]: { set: { [String(id)]: target } }, solveNow };
    if (settle) {
        payload.settle = true;
    }
    return { type: "updateHandles", session, payload };
}

export function clearHandleMsg(session: string, kind: HandleKind, id: number): Envelope<UpdatePayload> {
    return { type: "updateHandles", session, payload: { [kind]: { clear: [id] }, solveNow: true } };
}

export function getStateMsg(session: string): Envelope {
    return { type: "getState", session, payload: {} };
}

export function isSnapshot(msg: Envelope): msg is Snapshot {
    return msg.type === "stateSnapshot";
}

export function isError(msg: Envelope): msg is Envelope<ErrorPayload> {
    return msg.type === "error";
}

export function parseMessage(text: string): Envelope {
    return JSON.parse(text) as Envelope;
}

export function encodeMessage(msg: Envelope): string {
    return JSON.stringify(msg);
}
