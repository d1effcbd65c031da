/**
 * Pan/zoom camera: an affine map from model space (y up) to screen pixels
 * (y down). scale is pixels per model unit.
 */

export interface Point {
    x: number;
    y: number;
}

export class Camera {
    scale = 1;
    centerX = 0; // model point shown at the viewport center
    centerY = 0;
    viewW: number;
    viewH: number;

    constructor(viewW: number, viewH: number) {
        this.viewW = viewW;
        this.viewH = viewH;
    }

    modelToScreen(x: number, y: number): Point {
        return {
            x: (x - this.centerX) * this.scale + this.viewW / 2,
            y: (this.centerY - y) * this.scale + this.viewH / 2,
        };
    }

    screenToModel(px: number, py: number): Point {
        return {
            x: (px - this.viewW / 2) / this.scale + this.centerX,
            y: this.centerY - (py - this.viewH / 2) / this.scale,
        };
    }

    /** Pan by a screen-space delta (content follows the pointer). */
    panBy(dxPx: number, dyPx: number): void {
        this.centerX -= dxPx / this.scale;
        this.centerY += dyPx / this.scale;
    }

    /** Zoom by a factor keeping the model point under (px, py) fixed. */
    zoomAt(px: number, py: number, factor: number): void {
        const anchor = this.screenToModel(px, py);
        this.scale *= factor;
        const moved = this.screenToModel(px, py);
        this.centerX += anchor.x - moved.x;
        this.centerY += anchor.y - moved.y;
    }

    /** Fit an axis-aligned model box with a margin fraction per side. */
    fitBounds(minX: number, minY: number, maxX: number, maxY: number, margin = 0.08): void {
        const w = Math.max(maxX - minX, 1e-12);
        const h = Math.max(maxY - minY, 1e-12);
        this.scale = Math.min(
            (this.viewW * (1 - 2 * margin)) / w,
            (this.viewH * (1 - 2 * margin)) / h,
        );
        this.centerX = (minX + maxX) / 2;
        this.centerY = (minY + maxY) / 2;
    }

    resize(viewW: number, viewH: number): void {
        this.viewW = viewW;
        this.viewH = viewH;
    }
}
