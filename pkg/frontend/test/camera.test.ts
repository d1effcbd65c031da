import { describe, expect, it } from "vitest";

import { Camera } from "../src/camera.js";

describe("camera", () => {
    it("round-trips model and screen coordinates", () => {
        const cam = new Camera(800, 600);
        cam.scale = 37.5;
        cam.centerX = 1.2;
        cam.centerY = -0.4;
        const s = cam.modelToScreen(2.0, 0.5);
        const back = cam.screenToModel(s.x, s.y);
        expect(back.x).toBeCloseTo(2.0, 12);
        expect(back.y).toBeCloseTo(0.5, 12);
    });

    it("flips y so model up is screen up", () => {
        const cam = new Camera(800, 600);
        const low = cam.modelToScreen(0, 0);
        const high = cam.modelToScreen(0, 1);
        expect(high.y).toBeLessThan(low.y);
    });

    it("pans so content follows the pointer", () => {
        const cam = new Camera(800, 600);
        cam.scale = 50;
        const before = cam.modelToScreen(0, 0);
        cam.panBy(30, -12);
        const after = cam.modelToScreen(0, 0);
        expect(after.x - before.x).toBeCloseTo(30, 10);
        expect(after.y - before.y).toBeCloseTo(-12, 10);
    });

    it("zooms about the anchor point", () => {
        const cam = new Camera(800, 600);
        cam.fitBounds(0, 0, 4, 3);
        const anchorModel = cam.screenToModel(123, 456);
        cam.zoomAt(123, 456, 1.7);
        const after = cam.modelToScreen(anchorModel.x, anchorModel.y);
        expect(after.x).toBeCloseTo(123, 9);
        expect(after.y).toBeCloseTo(456, 9);
    });

    it("fits bounds inside the viewport with margin", () => {
        const cam = new Camera(1000, 500);
        cam.fitBounds(-2, -1, 6, 1, 0.1);
        for (const [x, y] of [[-2, -1], [6, 1], [-2, 1], [6, -1]] as const) {
            const s = cam.modelToScreen(x, y);
            expect(s.x).toBeGreaterThanOrEqual(0);
            expect(s.x).toBeLessThanOrEqual(1000);
            expect(s.y).toBeGreaterThanOrEqual(0);
            expect(s.y).toBeLessThanOrEqual(500);
        }
    });
});
