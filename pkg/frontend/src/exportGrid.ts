/**
 * Grid export: the reusable deformation artifact. The JSON matches the
 * solver's grid schema byte-for-value, so a file saved here feeds straight
 * into the CLI transfer/warp commands.
 */
import { SnapshotPayload } from "./protocol.js";

export interface GridJson {
    dims: number[];
    box: { origin: number[]; extent: number[] };
    rest: number[][];
    current: number[][];
}

export function gridFromSnapshot(snap: SnapshotPayload): GridJson {
    return {
        dims: snap.gridDims.slice(),
        box: {
            origin: snap.gridBox.origin.slice(),
            extent: snap.gridBox.extent.slice(),
        },
        rest: snap.gridRest.map((p) => p.slice()),
        current: snap.gridCurrent.map((p) => p.slice()),
    };
}

export function gridJsonText(snap: SnapshotPayload): string {
    return JSON.stringify(gridFromSnapshot(snap), null, 1);
}

/** Trigger a browser download of the current grid. */
export function downloadGrid(snap: SnapshotPayload, filename = "grid.json"): void {
    const blob = new Blob([gridJsonText(snap)], { type: "application/json" });
    const url = URL.createObjectURL(blob);
    const a = document.createElement("a");
    a.href = url;
    a.download = filename;
    a.click();
    URL.revokeObjectURL(url);
}
